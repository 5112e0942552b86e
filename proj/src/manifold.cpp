#include "orbit/manifold.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include <Eigen/Dense>

namespace orbit {

namespace {

Eigen::MatrixXd gram(const OrbitSpec& spec) { return spec.x0.transpose() * spec.x0; }

// Orthonormal basis of the orthogonal complement of col(x0), d x (d-k).
Eigen::MatrixXd complement_basis(const Eigen::MatrixXd& x0) {
  const Eigen::Index d = x0.rows();
  const Eigen::Index k = x0.cols();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(x0);
  Eigen::MatrixXd Qfull = qr.householderQ() * Eigen::MatrixXd::Identity(d, d);
  return Qfull.rightCols(d - k);
}

// Modified Gram-Schmidt in the Frobenius inner product; drops nothing, the
// callers only pass linearly independent families.
std::vector<Eigen::MatrixXd> orthonormalize(std::vector<Eigen::MatrixXd> mats) {
  for (std::size_t i = 0; i < mats.size(); ++i) {
    for (std::size_t j = 0; j < i; ++j)
      mats[i] -= mats[j].cwiseProduct(mats[i]).sum() * mats[j];
    double n = mats[i].norm();
    if (n <= 0.0) throw std::logic_error("orthonormalize: dependent family");
    mats[i] /= n;
  }
  return mats;
}

void require_on_orbit(const OrbitSpec& spec, const Eigen::MatrixXd& X) {
  if (eta(spec, X) >= 1e-16 * X.squaredNorm())
    throw std::domain_error("basis requested at an off-manifold point");
}

}  // namespace

OrbitSpec::OrbitSpec(Eigen::MatrixXd x0_in, int branch_in)
    : x0(std::move(x0_in)), branch(branch_in) {
  validate();
}

void OrbitSpec::validate() const {
  if (x0.rows() < 1 || x0.cols() < 1 || x0.rows() < x0.cols())
    throw std::invalid_argument("OrbitSpec: x0 must be d x k with d >= k >= 1");
  if (branch != 1 && branch != 2) throw std::invalid_argument("OrbitSpec: branch must be 1 or 2");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x0);
  double smin = svd.singularValues()(svd.singularValues().size() - 1);
  double smax = svd.singularValues()(0);
  double rank_tol =
      smax * std::max(x0.rows(), x0.cols()) * std::numeric_limits<double>::epsilon();
  if (!(smin > rank_tol))
    throw std::invalid_argument("OrbitSpec: x0 must have full column rank");
}

double OrbitSpec::sigma_min() const {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(x0);
  return svd.singularValues()(svd.singularValues().size() - 1);
}

ProjectionResult project_to_orbit(const OrbitSpec& spec, const Eigen::MatrixXd& X) {
  if (X.rows() != spec.d() || X.cols() != spec.k())
    throw std::invalid_argument("project_to_orbit: X must match x0's shape");
  if (!X.allFinite()) throw std::invalid_argument("project_to_orbit: X must be finite");

  const int k = spec.k();
  // With X = x0 R + V, V orthogonal to col(x0), this equals R^T x0^T x0.
  Eigen::MatrixXd C = X.transpose() * spec.x0;
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(C, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Eigen::VectorXd& sv = svd.singularValues();
  if (!(sv(0) > 0.0) || sv(k - 1) <= 1e-12 * sv(0))
    throw DegenerateProjection("projection target is rank deficient; nearest point not unique");

  double want = (spec.branch == 1) ? 1.0 : -1.0;
  Eigen::MatrixXd B = svd.matrixV();
  Eigen::MatrixXd U = B * svd.matrixU().transpose();
  if (U.determinant() * want < 0.0) {
    // Constrained optimum: flip the column paired with the smallest singular
    // value (singular values are sorted in decreasing order).
    B.col(k - 1) = -B.col(k - 1);
    U = B * svd.matrixU().transpose();
  }

  ProjectionResult out;
  out.u = U;
  out.branch = spec.branch;
  out.pi_x = spec.x0 * U;
  out.distance = (X - out.pi_x).norm();
  return out;
}

double eta(const OrbitSpec& spec, const Eigen::MatrixXd& X) {
  double dist = project_to_orbit(spec, X).distance;
  return dist * dist;
}

std::vector<Eigen::MatrixXd> tangent_basis(const OrbitSpec& spec,
                                           const Eigen::MatrixXd& X_on_orbit) {
  require_on_orbit(spec, X_on_orbit);
  const int k = spec.k();
  std::vector<Eigen::MatrixXd> raw;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      Eigen::MatrixXd A = Eigen::MatrixXd::Zero(k, k);
      A(i, j) = inv_sqrt2;
      A(j, i) = -inv_sqrt2;
      raw.push_back(X_on_orbit * A);
    }
  }
  return orthonormalize(std::move(raw));
}

std::vector<Eigen::MatrixXd> normal_basis(const OrbitSpec& spec,
                                          const Eigen::MatrixXd& X_on_orbit) {
  require_on_orbit(spec, X_on_orbit);
  const int d = spec.d();
  const int k = spec.k();
  Eigen::MatrixXd XtX = X_on_orbit.transpose() * X_on_orbit;
  Eigen::MatrixXd Xpinv = X_on_orbit * XtX.inverse();
  std::vector<Eigen::MatrixXd> raw;
  const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
  for (int a = 0; a < k; ++a) {
    for (int b = a; b < k; ++b) {
      Eigen::MatrixXd S = Eigen::MatrixXd::Zero(k, k);
      if (a == b) {
        S(a, a) = 1.0;
      } else {
        S(a, b) = inv_sqrt2;
        S(b, a) = inv_sqrt2;
      }
      raw.push_back(Xpinv * S);
    }
  }
  Eigen::MatrixXd Q = complement_basis(X_on_orbit);
  for (int c = 0; c < d - k; ++c)
    for (int a = 0; a < k; ++a) {
      Eigen::MatrixXd Y = Eigen::MatrixXd::Zero(d, k);
      Y.col(a) = Q.col(c);
      raw.push_back(std::move(Y));
    }
  return orthonormalize(std::move(raw));
}

double separation_lower_bound(const OrbitSpec& spec) {
  return 2.0 * spec.sigma_min() / static_cast<double>(spec.k());
}

double tubular_radius(const OrbitSpec& spec, double D) {
  if (!(D > 0.0)) throw std::invalid_argument("tubular_radius: D must be positive");
  return 2.0 * spec.sigma_min() / (static_cast<double>(spec.k()) * D);
}

NormalCoordinates decompose(const OrbitSpec& spec, const Eigen::MatrixXd& X,
                            double tube_radius) {
  double radius = tube_radius < 0.0 ? tubular_radius(spec, 2.0) : tube_radius;
  ProjectionResult pr = project_to_orbit(spec, X);
  if (pr.distance > radius)
    throw TubeExceeded("point lies outside the tube: distance " + std::to_string(pr.distance) +
                       " exceeds radius " + std::to_string(radius));
  NormalCoordinates c;
  c.u = pr.u;
  Eigen::MatrixXd W = X * pr.u.transpose() - spec.x0;
  Eigen::MatrixXd S = spec.x0.transpose() * W;
  c.s = 0.5 * (S + S.transpose());  // exact symmetry up to roundoff
  c.y = W - spec.x0 * gram(spec).ldlt().solve(c.s);
  return c;
}

Eigen::MatrixXd recompose(const OrbitSpec& spec, const NormalCoordinates& coords) {
  Eigen::MatrixXd inner = spec.x0 + spec.x0 * gram(spec).ldlt().solve(coords.s) + coords.y;
  return inner * coords.u;
}

namespace {

// Frobenius-orthonormal output coordinates of the (S, Y) pair. Q spans the
// complement of col(x0); length k(k+1)/2 + (d-k)k = d*k - k(k-1)/2.
Eigen::VectorXd output_coords(const NormalCoordinates& c, const Eigen::MatrixXd& Q) {
  const int k = static_cast<int>(c.s.rows());
  const int dmk = static_cast<int>(Q.cols());
  Eigen::VectorXd out(k * (k + 1) / 2 + dmk * k);
  Eigen::Index pos = 0;
  const double sqrt2 = std::sqrt(2.0);
  for (int a = 0; a < k; ++a) out(pos++) = c.s(a, a);
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b) out(pos++) = sqrt2 * c.s(a, b);
  Eigen::MatrixXd Yc = Q.transpose() * c.y;  // (d-k) x k
  for (Eigen::Index j = 0; j < Yc.cols(); ++j)
    for (Eigen::Index i = 0; i < Yc.rows(); ++i) out(pos++) = Yc(i, j);
  return out;
}

}  // namespace

NormalDeterminantInfo normal_determinant_full(const OrbitSpec& spec, const Eigen::MatrixXd& X) {
  const int d = spec.d();
  const int k = spec.k();
  const int ambient = d * k;
  const int m = k * (k - 1) / 2;
  const int rows = ambient - m;
  Eigen::MatrixXd Q = complement_basis(spec.x0);
  const double delta = 1e-5 * X.norm();
  if (!(delta > 0.0))
    throw std::invalid_argument("normal_determinant: X must be nonzero");

  Eigen::MatrixXd J(rows, ambient);
  int col = 0;
  for (int jj = 0; jj < k; ++jj)
    for (int ii = 0; ii < d; ++ii) {
      Eigen::MatrixXd Xp = X;
      Eigen::MatrixXd Xm = X;
      Xp(ii, jj) += delta;
      Xm(ii, jj) -= delta;
      NormalCoordinates cp = decompose(spec, Xp);
      NormalCoordinates cm = decompose(spec, Xm);
      J.col(col++) = (output_coords(cp, Q) - output_coords(cm, Q)) / (2.0 * delta);
    }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  const Eigen::VectorXd& sv = svd.singularValues();
  NormalDeterminantInfo info;
  info.value = 1.0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) info.value *= sv(i);
  double smin = sv(sv.size() - 1);
  info.condition = smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
  info.condition_warning = !(info.condition < 1e8);
  return info;
}

double normal_determinant(const OrbitSpec& spec, const Eigen::MatrixXd& X) {
  return normal_determinant_full(spec, X).value;
}

double normal_determinant_closed_form(const OrbitSpec& spec) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram(spec));
  const Eigen::VectorXd& lam = es.eigenvalues();
  double det = 1.0;
  for (Eigen::Index a = 0; a < lam.size(); ++a) det *= std::sqrt(lam(a));
  for (Eigen::Index a = 0; a < lam.size(); ++a)
    for (Eigen::Index b = a + 1; b < lam.size(); ++b)
      det *= std::sqrt(2.0 * lam(a) * lam(b) / (lam(a) + lam(b)));
  return det;
}

double normal_determinant_kron_form(const OrbitSpec& spec) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram(spec));
  const Eigen::VectorXd& lam = es.eigenvalues();
  double det = 1.0;
  const double kk = static_cast<double>(spec.k());
  for (Eigen::Index a = 0; a < lam.size(); ++a) det *= std::pow(lam(a), -kk / 2.0);
  return det;
}

}  // namespace orbit
