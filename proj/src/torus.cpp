#include "orbit/torus.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

#include "orbit/io.hpp"
#include "orbit/sampler.hpp"

namespace orbit {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_2pi(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a;
}

// Signed angular difference in (-pi, pi].
double wrap_pi(double a) {
  a = std::fmod(a, kTwoPi);
  if (a <= -std::numbers::pi) a += kTwoPi;
  if (a > std::numbers::pi) a -= kTwoPi;
  return a;
}

void require_off_axis(const Eigen::Vector3d& x) {
  if (std::hypot(x(0), x(1)) < 1e-12)
    throw DegenerateProjection("point on the z-axis has no unique circle projection");
}

}  // namespace

double torus_loss(const Eigen::Vector3d& x) {
  require_off_axis(x);
  double r = std::hypot(x(0), x(1));
  return (r - 1.0) * (r - 1.0) + x(2) * x(2);
}

Eigen::Vector3d torus_gradient(const Eigen::Vector3d& x) {
  require_off_axis(x);
  double r = std::hypot(x(0), x(1));
  double coeff = 2.0 * (r - 1.0) / r;
  return {coeff * x(0), coeff * x(1), 2.0 * x(2)};
}

TorusCoords torus_coords(const Eigen::Vector3d& x) {
  require_off_axis(x);
  double r = std::hypot(x(0), x(1));
  TorusCoords c;
  c.u = wrap_2pi(std::atan2(x(1), x(0)));
  c.s = std::hypot(r - 1.0, x(2));
  c.v = c.s < 1e-15 ? 0.0 : wrap_2pi(std::atan2(x(2), r - 1.0));
  return c;
}

Eigen::Vector3d torus_point(const TorusCoords& c) {
  double ring = 1.0 + c.s * std::cos(c.v);
  return {ring * std::cos(c.u), ring * std::sin(c.u), c.s * std::sin(c.v)};
}

double torus_normal_determinant(const Eigen::Vector3d& x) {
  TorusCoords c0 = torus_coords(x);
  if (c0.s < 1e-12) throw std::domain_error("level map is singular on the circle (s = 0)");
  const double delta = 1e-5 * std::max(1.0, x.norm());
  // Rows of the 2 x 3 Jacobian of x -> (s, v); the v difference is taken on
  // the circle to survive the 0/2*pi wrap.
  Eigen::Matrix<double, 2, 3> J;
  for (int i = 0; i < 3; ++i) {
    Eigen::Vector3d xp = x, xm = x;
    xp(i) += delta;
    xm(i) -= delta;
    TorusCoords cp = torus_coords(xp);
    TorusCoords cm = torus_coords(xm);
    J(0, i) = (cp.s - cm.s) / (2.0 * delta);
    J(1, i) = wrap_pi(cp.v - cm.v) / (2.0 * delta);
  }
  // sqrt(det(J J^T)) via the 2 x 2 Gram determinant.
  double g11 = J.row(0).squaredNorm();
  double g22 = J.row(1).squaredNorm();
  double g12 = J.row(0).dot(J.row(1));
  return std::sqrt(std::max(0.0, g11 * g22 - g12 * g12));
}

namespace {

struct Quad {
  std::vector<double> x, w;
};

// Gauss-Legendre rule on [a, b] by the Golub-Welsch eigenvalue method.
Quad gauss_legendre(int n, double a, double b) {
  Eigen::MatrixXd Jm = Eigen::MatrixXd::Zero(n, n);
  for (int j = 1; j < n; ++j) {
    double off = static_cast<double>(j) / std::sqrt(4.0 * j * j - 1.0);
    Jm(j - 1, j) = off;
    Jm(j, j - 1) = off;
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Jm);
  Quad q;
  q.x.resize(static_cast<std::size_t>(n));
  q.w.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double node = es.eigenvalues()(i);
    double w0 = es.eigenvectors()(0, i);
    q.x[static_cast<std::size_t>(i)] = 0.5 * (b - a) * node + 0.5 * (a + b);
    q.w[static_cast<std::size_t>(i)] = 2.0 * w0 * w0 * 0.5 * (b - a);
  }
  return q;
}

// Periodic trapezoid rule on [0, 2*pi).
Quad periodic_grid(int n) {
  Quad q;
  q.x.resize(static_cast<std::size_t>(n));
  q.w.assign(static_cast<std::size_t>(n), kTwoPi / static_cast<double>(n));
  for (int i = 0; i < n; ++i) q.x[static_cast<std::size_t>(i)] = kTwoPi * i / n;
  return q;
}

double chi_eval(const std::string& chi, const TorusCoords& c) {
  if (chi == "one") return 1.0;
  if (chi == "cos_u") return std::cos(c.u);
  if (chi == "s2") return c.s * c.s;
  throw std::invalid_argument("torus_decomposition_check: unknown chi '" + chi + "'");
}

struct PairLR {
  double lhs, rhs;
};

PairLR check_at_resolution(double beta, const std::string& chi, double s_max, int nu, int nv,
                           int ns) {
  Quad qu = periodic_grid(nu);
  Quad qv = periodic_grid(nv);
  Quad qs = gauss_legendre(ns, 0.0, s_max);

  // Left side: direct chart quadrature with the exact volume element
  // s (1 + s cos v) ds du dv; no normal determinant involved.
  double l_num = 0.0, l_den = 0.0;
  // Right side: outer ds dv, inner arc-length integral over the fiber with
  // the numeric 1/det weight.
  double r_num = 0.0, r_den = 0.0;

  for (std::size_t is = 0; is < qs.x.size(); ++is) {
    double s = qs.x[is];
    for (std::size_t iv = 0; iv < qv.x.size(); ++iv) {
      double v = qv.x[iv];
      double ring = 1.0 + s * std::cos(v);
      double outer_w = qs.w[is] * qv.w[iv];
      for (std::size_t iu = 0; iu < qu.x.size(); ++iu) {
        TorusCoords c{s, qu.x[iu], v};
        Eigen::Vector3d x = torus_point(c);
        double weight_f = std::exp(-beta * torus_loss(x));
        double cval = chi_eval(chi, c);

        double l_w = outer_w * qu.w[iu] * weight_f * s * ring;
        l_num += cval * l_w;
        l_den += l_w;

        double det = torus_normal_determinant(x);
        double r_w = outer_w * qu.w[iu] * weight_f * ring / det;
        r_num += cval * r_w;
        r_den += r_w;
      }
    }
  }
  return {l_num / l_den, r_num / r_den};
}

}  // namespace

TorusCheckResult torus_decomposition_check(double beta, const std::string& chi, double s_max) {
  if (!(beta > 0.0)) throw std::invalid_argument("torus_decomposition_check: beta must be > 0");
  if (!(s_max > 0.0 && s_max < 1.0))
    throw std::invalid_argument("torus_decomposition_check: need 0 < s_max < 1");
  PairLR coarse = check_at_resolution(beta, chi, s_max, 64, 64, 32);
  PairLR fine = check_at_resolution(beta, chi, s_max, 128, 128, 64);
  TorusCheckResult out;
  out.chi = chi;
  out.lhs = fine.lhs;
  out.rhs = fine.rhs;
  double scale = std::max({1.0, std::fabs(fine.lhs), std::fabs(fine.rhs)});
  out.richardson_rel = std::max(std::fabs(fine.lhs - coarse.lhs),
                                std::fabs(fine.rhs - coarse.rhs)) /
                       scale;
  out.converged = out.richardson_rel <= 1e-6;
  return out;
}

namespace {

struct TorusPotential final : Potential {
  double value(const Eigen::MatrixXd& X) const override {
    return torus_loss(Eigen::Vector3d(X(0, 0), X(1, 0), X(2, 0)));
  }
  Eigen::MatrixXd gradient_at(const Eigen::MatrixXd& X) const override {
    return torus_gradient(Eigen::Vector3d(X(0, 0), X(1, 0), X(2, 0)));
  }
};

}  // namespace

TorusSamples torus_langevin_samples(double beta, double h, long steps, long burnin, long thin,
                                    std::uint64_t seed) {
  if (!(beta > 0.0 && h > 0.0) || steps <= 0 || burnin < 0 || burnin >= steps || thin < 1)
    throw std::invalid_argument("torus_langevin_samples: invalid parameters");
  TorusPotential pot;
  Eigen::MatrixXd x0(3, 1);
  x0 << 1.0, 0.0, 0.0;
  ChainState state(x0, RngStream(seed, 0));
  TorusSamples out;
  for (long i = 1; i <= steps; ++i) {
    state = langevin_step(pot, beta, h, std::move(state));
    if (i >= burnin && (i - burnin) % thin == 0) {
      TorusCoords c =
          torus_coords(Eigen::Vector3d(state.x(0, 0), state.x(1, 0), state.x(2, 0)));
      out.u.push_back(c.u);
      out.s.push_back(c.s);
      out.v.push_back(c.v);
    }
  }
  return out;
}

std::string torus_samples_to_csv(const TorusSamples& samples) {
  std::string out = "u,s,v\n";
  for (std::size_t i = 0; i < samples.u.size(); ++i) {
    out += io::format_double(samples.u[i]);
    out += ',';
    out += io::format_double(samples.s[i]);
    out += ',';
    out += io::format_double(samples.v[i]);
    out += '\n';
  }
  return out;
}

}  // namespace orbit
