#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "orbit/rng.hpp"
#include "orbit/stats.hpp"
#include "orbit/torus.hpp"
#include "orbit/types.hpp"

using namespace orbit;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

Eigen::Vector3d random_point(RngStream& rng, double s_scale) {
  TorusCoords c;
  c.u = kTwoPi * rng.next_uniform();
  c.v = kTwoPi * rng.next_uniform();
  c.s = s_scale * (0.1 + 0.9 * rng.next_uniform());
  return torus_point(c);
}

}  // namespace

TEST_CASE("coordinates and chart invert each other") {
  Eigen::Vector3d a(2.0, 0.0, 0.0);
  TorusCoords ca = torus_coords(a);
  CHECK(ca.u == doctest::Approx(0.0));
  CHECK(ca.s == doctest::Approx(1.0));
  CHECK(ca.v == doctest::Approx(0.0));

  Eigen::Vector3d b(0.0, 1.0, 0.5);
  TorusCoords cb = torus_coords(b);
  CHECK(cb.u == doctest::Approx(std::numbers::pi / 2.0));
  CHECK(cb.s == doctest::Approx(0.5));
  CHECK(cb.v == doctest::Approx(std::numbers::pi / 2.0));

  Eigen::Vector3d c(0.6, 0.0, -0.3);
  TorusCoords cc = torus_coords(c);
  CHECK(cc.s == doctest::Approx(0.5));
  CHECK(cc.v == doctest::Approx(kTwoPi + std::atan2(-0.3, -0.4)));

  RngStream rng(1, 0);
  for (int t = 0; t < 20; ++t) {
    Eigen::Vector3d x = random_point(rng, 0.6);
    TorusCoords cx = torus_coords(x);
    CHECK((torus_point(cx) - x).norm() < 1e-12);
    CHECK(cx.u >= 0.0);
    CHECK(cx.u < kTwoPi);
    CHECK(cx.v >= 0.0);
    CHECK(cx.v < kTwoPi);
    CHECK(cx.s >= 0.0);
  }

  // On the circle itself v collapses to the convention value 0.
  TorusCoords on = torus_coords(Eigen::Vector3d(0.0, 1.0, 0.0));
  CHECK(on.s == doctest::Approx(0.0));
  CHECK(on.v == 0.0);
}

TEST_CASE("loss equals squared distance to the circle") {
  CHECK(torus_loss(Eigen::Vector3d(2.0, 0.0, 0.0)) == doctest::Approx(1.0));
  CHECK(torus_loss(Eigen::Vector3d(0.6, 0.0, -0.3)) == doctest::Approx(0.25));
  RngStream rng(2, 0);
  for (int t = 0; t < 20; ++t) {
    Eigen::Vector3d x = random_point(rng, 0.8);
    TorusCoords c = torus_coords(x);
    CHECK(torus_loss(x) == doctest::Approx(c.s * c.s).epsilon(1e-12));
  }
}

TEST_CASE("gradient matches finite differences and the hand value") {
  Eigen::Vector3d g = torus_gradient(Eigen::Vector3d(2.0, 0.0, 0.0));
  CHECK(g(0) == doctest::Approx(2.0));  // 2(r-1)/r * x with r = 2
  CHECK(g(1) == doctest::Approx(0.0));
  CHECK(g(2) == doctest::Approx(0.0));

  RngStream rng(3, 0);
  for (int t = 0; t < 10; ++t) {
    Eigen::Vector3d x = random_point(rng, 0.7);
    Eigen::Vector3d grad = torus_gradient(x);
    for (int i = 0; i < 3; ++i) {
      Eigen::Vector3d xp = x, xm = x;
      xp(i) += 1e-6;
      xm(i) -= 1e-6;
      double fd = (torus_loss(xp) - torus_loss(xm)) / 2e-6;
      CHECK(grad(i) == doctest::Approx(fd).epsilon(1e-5));
    }
  }
}

TEST_CASE("the z-axis is rejected") {
  CHECK_THROWS_AS(torus_loss(Eigen::Vector3d(0, 0, 1)), DegenerateProjection);
  CHECK_THROWS_AS(torus_gradient(Eigen::Vector3d(0, 0, 0.5)), DegenerateProjection);
  CHECK_THROWS_AS(torus_coords(Eigen::Vector3d(0, 0, -2)), DegenerateProjection);
}

TEST_CASE("level-map determinant is 1/s") {
  TorusCoords c;
  c.u = 0.3;
  c.v = 1.0;
  c.s = 0.5;
  CHECK(torus_normal_determinant(torus_point(c)) == doctest::Approx(2.0).epsilon(1e-6));

  RngStream rng(4, 0);
  for (int t = 0; t < 10; ++t) {
    Eigen::Vector3d x = random_point(rng, 0.5);
    double s = torus_coords(x).s;
    CHECK(torus_normal_determinant(x) == doctest::Approx(1.0 / s).epsilon(1e-6));
  }

  // Singular on the circle.
  CHECK_THROWS_AS(torus_normal_determinant(Eigen::Vector3d(1.0, 0.0, 0.0)),
                  std::domain_error);

  // Log-log slope of det against s is -1.
  std::vector<double> ss{0.05, 0.1, 0.2, 0.4};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (double s : ss) {
    TorusCoords cc;
    cc.u = 1.1;
    cc.v = 2.2;
    cc.s = s;
    double lx = std::log(s);
    double ly = std::log(torus_normal_determinant(torus_point(cc)));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double n = static_cast<double>(ss.size());
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope == doctest::Approx(-1.0).epsilon(0.01));
}

TEST_CASE("determinant and loss are invariant under rotations about the axis") {
  RngStream rng(5, 0);
  for (int t = 0; t < 5; ++t) {
    Eigen::Vector3d x = random_point(rng, 0.5);
    double phi = kTwoPi * rng.next_uniform();
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    R(0, 0) = std::cos(phi);
    R(0, 1) = -std::sin(phi);
    R(1, 0) = std::sin(phi);
    R(1, 1) = std::cos(phi);
    Eigen::Vector3d y = R * x;
    CHECK(torus_loss(y) == doctest::Approx(torus_loss(x)).epsilon(1e-12));
    TorusCoords cx = torus_coords(x), cy = torus_coords(y);
    CHECK(cy.s == doctest::Approx(cx.s).epsilon(1e-12));
    CHECK(std::abs(std::remainder(cy.v - cx.v, kTwoPi)) < 1e-12);
    CHECK(std::abs(std::remainder(cy.u - cx.u - phi, kTwoPi)) < 1e-10);
    CHECK(torus_normal_determinant(y) ==
          doctest::Approx(torus_normal_determinant(x)).epsilon(1e-6));
  }
}

TEST_CASE("decomposition check: both quadrature routes agree") {
  const double beta = 25.0, s_max = 0.3;

  TorusCheckResult one = torus_decomposition_check(beta, "one", s_max);
  CHECK(one.lhs == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(one.rhs == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(one.converged);
  CHECK(one.chi == "one");

  TorusCheckResult cosu = torus_decomposition_check(beta, "cos_u", s_max);
  CHECK(std::abs(cosu.lhs) < 1e-9);
  CHECK(std::abs(cosu.rhs) < 1e-6);
  CHECK(cosu.converged);

  // E[s^2] for density s exp(-beta s^2) on [0, s_max], in closed form.
  double T = s_max * s_max;
  double num = (1.0 - std::exp(-beta * T) * (1.0 + beta * T)) / (2.0 * beta * beta);
  double den = (1.0 - std::exp(-beta * T)) / (2.0 * beta);
  double expected = num / den;
  TorusCheckResult s2 = torus_decomposition_check(beta, "s2", s_max);
  CHECK(s2.lhs == doctest::Approx(expected).epsilon(1e-7));
  CHECK(s2.rhs == doctest::Approx(s2.lhs).epsilon(1e-6));
  CHECK(s2.converged);
  CHECK(s2.richardson_rel <= 1e-6);
}

TEST_CASE("decomposition check rejects bad arguments") {
  CHECK_THROWS_AS(torus_decomposition_check(0.0, "one", 0.3), std::invalid_argument);
  CHECK_THROWS_AS(torus_decomposition_check(25.0, "one", 0.0), std::invalid_argument);
  CHECK_THROWS_AS(torus_decomposition_check(25.0, "one", 1.0), std::invalid_argument);
  CHECK_THROWS_AS(torus_decomposition_check(25.0, "sin_u", 0.3), std::invalid_argument);
}

TEST_CASE("torus chain: shapes, ranges, determinism") {
  TorusSamples s = torus_langevin_samples(25.0, 0.004, 20000, 2000, 20, 7);
  const std::size_t expect = (20000 - 2000) / 20 + 1;
  REQUIRE(s.u.size() == expect);
  REQUIRE(s.s.size() == expect);
  REQUIRE(s.v.size() == expect);
  for (std::size_t i = 0; i < s.u.size(); ++i) {
    CHECK(s.u[i] >= 0.0);
    CHECK(s.u[i] < kTwoPi);
    CHECK(s.v[i] >= 0.0);
    CHECK(s.v[i] < kTwoPi);
    CHECK(s.s[i] >= 0.0);
  }
  TorusSamples again = torus_langevin_samples(25.0, 0.004, 20000, 2000, 20, 7);
  CHECK(again.u == s.u);
  CHECK(again.s == s.s);
  CHECK(again.v == s.v);
  TorusSamples other = torus_langevin_samples(25.0, 0.004, 20000, 2000, 20, 8);
  CHECK(other.u != s.u);

  CHECK_THROWS_AS(torus_langevin_samples(-1.0, 0.004, 100, 0, 1, 0), std::invalid_argument);
  CHECK_THROWS_AS(torus_langevin_samples(25.0, 0.004, 100, 200, 1, 0), std::invalid_argument);

  std::string csv = torus_samples_to_csv(s);
  std::istringstream in(csv);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "u,s,v");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == expect);
}

TEST_CASE("long chain: the angle along the circle is uniform") {
  TorusSamples s = torus_langevin_samples(25.0, 0.004, 6000000, 100000, 500, 2024);
  double ks = stats::ks_statistic_uniform(s.u, 0.0, kTwoPi);
  CHECK(ks < 0.02);
}

TEST_CASE("long chain at fine step: radial law matches s exp(-beta s^2)") {
  const double beta = 25.0;
  TorusSamples smp = torus_langevin_samples(beta, 5e-5, 10000000, 100000, 1000, 99);
  const auto& s = smp.s;
  REQUIRE(s.size() > 9000);

  // 20 equiprobable bins of F(s) = 1 - exp(-beta s^2).
  const int bins = 20;
  std::vector<int> counts(bins, 0);
  for (double v : s) {
    double F = 1.0 - std::exp(-beta * v * v);
    int b = std::min(bins - 1, static_cast<int>(F * bins));
    counts[b]++;
  }
  double expect = static_cast<double>(s.size()) / bins;
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - expect) * (c - expect) / expect;
  // 1% critical value of chi-square with 19 dof.
  CHECK(chi2 < 36.19);
}
