#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "orbit/processes.hpp"
#include "orbit/rng.hpp"
#include "orbit/stats.hpp"

using namespace orbit;

namespace {

CirParams reference_params() {
  CirParams p;
  p.gamma = 2.0;
  p.n_tilde = 4.0;
  p.y0 = 1.0;
  p.h = 1e-3;
  p.horizon = 1.0;
  return p;
}

std::vector<double> column(const Eigen::MatrixXd& m, int j) {
  std::vector<double> out(m.rows());
  for (int i = 0; i < m.rows(); ++i) out[i] = m(i, j);
  return out;
}

}  // namespace

TEST_CASE("CirParams validation, grid, and accuracy warning") {
  CirParams p = reference_params();
  CHECK_NOTHROW(p.validate());
  CHECK(p.time_points() == 1001);
  auto grid = p.time_grid();
  REQUIRE(grid.size() == 1001);
  CHECK(grid.front() == 0.0);
  CHECK(grid.back() == doctest::Approx(1.0));
  CHECK(grid[1] == doctest::Approx(1e-3));

  CHECK(!p.accuracy_warning());  // 1e-3 <= 0.1/2
  CirParams coarse = p;
  coarse.h = 0.2;
  CHECK(coarse.accuracy_warning());

  CirParams bad = p;
  bad.gamma = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.n_tilde = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.y0 = -0.1;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.h = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = p;
  bad.horizon = -1.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("closed-form mean of the square-root diffusion") {
  CirParams p = reference_params();
  // y0 e^{-gamma t} + (n_tilde/gamma)(1 - e^{-gamma t}) at t = 1.
  CHECK(cir_mean_closed_form(p, 1.0) == doctest::Approx(1.8646647167633873).epsilon(1e-14));
  CHECK(cir_mean_closed_form(p, 0.0) == doctest::Approx(1.0));
  // Long-run limit n_tilde / gamma.
  CHECK(cir_mean_closed_form(p, 100.0) == doctest::Approx(2.0));
}

TEST_CASE("Euler paths track the closed-form mean") {
  CirParams p = reference_params();
  RngStream rng(101, 0);
  Eigen::MatrixXd paths = cir_simulate(p, rng, 10000);
  REQUIRE(paths.rows() == 10000);
  REQUIRE(paths.cols() == p.time_points());
  CHECK(paths.minCoeff() >= 0.0);  // full truncation keeps paths nonnegative
  CHECK((paths.col(0).array() == 1.0).all());

  for (double t : {0.1, 0.5, 1.0}) {
    int j = static_cast<int>(std::lround(t / p.h));
    double m = paths.col(j).mean();
    CHECK(m == doctest::Approx(cir_mean_closed_form(p, t)).epsilon(0.03));
  }
}

TEST_CASE("a driftless start at zero stays exactly zero") {
  CirParams p;
  p.gamma = 1.0;
  p.n_tilde = 0.0;
  p.y0 = 0.0;
  p.h = 0.01;
  p.horizon = 0.5;
  RngStream rng(5, 0);
  Eigen::MatrixXd paths = cir_simulate(p, rng, 50);
  CHECK(paths.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("simulators are deterministic in the stream") {
  CirParams p = reference_params();
  p.h = 0.01;
  RngStream a(7, 1), b(7, 1);
  CHECK((cir_simulate(p, a, 20) - cir_simulate(p, b, 20)).cwiseAbs().maxCoeff() == 0.0);
  RngStream c(7, 2), d(7, 2);
  CHECK((ou_squares_simulate(p, c, 20) - ou_squares_simulate(p, d, 20))
            .cwiseAbs()
            .maxCoeff() == 0.0);
}

TEST_CASE("squared OU components require an even integer drift") {
  CirParams p = reference_params();
  RngStream rng(8, 0);
  p.n_tilde = 3.0;
  CHECK_THROWS_AS(ou_squares_simulate(p, rng, 5), std::domain_error);
  p.n_tilde = 0.0;
  CHECK_THROWS_AS(ou_squares_simulate(p, rng, 5), std::domain_error);
}

TEST_CASE("squared OU marginal from zero is a scaled chi-square") {
  CirParams p;
  p.gamma = 2.0;
  p.n_tilde = 2.0;  // 4 * n_tilde = 8 squared components
  p.y0 = 0.0;
  p.h = 0.05;
  p.horizon = 1.0;
  RngStream rng(909, 0);
  Eigen::MatrixXd paths = ou_squares_simulate(p, rng, 20000);
  int j = p.time_points() - 1;  // t = 1
  double v = (1.0 - std::exp(-p.gamma * 1.0)) / (4.0 * p.gamma);
  std::vector<double> sample = column(paths, j);
  double ks = stats::ks_statistic(
      sample, [&](double x) { return stats::chi_square_cdf(x / v, 8.0); });
  CHECK(ks < 1.63 / std::sqrt(20000.0));  // 1% KS critical value

  // Mean of the scaled chi-square: 8 v = n_tilde (1 - e^{-gamma t}) / gamma.
  CHECK(stats::mean(sample) == doctest::Approx(8.0 * v).epsilon(0.03));

  // Near-stationary mean approaches n_tilde / gamma.
  CirParams late = p;
  late.horizon = 6.0;
  RngStream rng2(910, 0);
  Eigen::MatrixXd far = ou_squares_simulate(late, rng2, 20000);
  CHECK(far.col(late.time_points() - 1).mean() ==
        doctest::Approx(p.n_tilde / p.gamma).epsilon(0.03));
}

TEST_CASE("Euler and squared-OU routes agree on moments") {
  CirParams p = reference_params();
  RngStream r1(11, 0), r2(12, 0);
  Eigen::MatrixXd euler = cir_simulate(p, r1, 10000);
  Eigen::MatrixXd exact = ou_squares_simulate(p, r2, 10000);
  REQUIRE(euler.cols() == exact.cols());
  for (double t : {0.25, 0.5, 1.0}) {
    int j = static_cast<int>(std::lround(t / p.h));
    double me = euler.col(j).mean();
    double mx = exact.col(j).mean();
    CHECK(me == doctest::Approx(mx).epsilon(0.05));
    double ve = stats::variance(column(euler, j));
    double vx = stats::variance(column(exact, j));
    CHECK(ve == doctest::Approx(vx).epsilon(0.15));
  }
}

TEST_CASE("path envelope: analytic bound dominates the empirical quantile") {
  CirParams p = reference_params();
  RngStream rng(21, 0);
  EnvelopeResult env = cir_envelope_quantile(p, 0.99, 1.0, rng, 4000);
  // 4 sqrt(y0^2 + n_tilde log(1/eps) / gamma) with eps = 0.01.
  CHECK(env.analytic_envelope == doctest::Approx(12.781449289952175).epsilon(1e-12));
  CHECK(env.empirical_quantile > p.n_tilde / p.gamma);  // above the stationary mean
  CHECK(env.empirical_quantile < env.analytic_envelope);

  CHECK_THROWS_AS(cir_envelope_quantile(p, 1.0, 1.0, rng), std::invalid_argument);
  CHECK_THROWS_AS(cir_envelope_quantile(p, 0.0, 1.0, rng), std::invalid_argument);
}

TEST_CASE("dominance: matched dynamics raise almost no flags") {
  CirParams p = reference_params();
  p.h = 0.01;
  RngStream obs_rng(31, 0);
  Eigen::MatrixXd observed = cir_simulate(p, obs_rng, 3000);
  RngStream cmp_rng(32, 0);
  DominanceReport rep =
      dominance_compare(observed, p.time_grid(), p, cmp_rng, 3000, 100);
  REQUIRE(rep.times.size() == p.time_grid().size());
  CHECK(!rep.interpolated);
  CHECK(rep.flagged_fraction < 0.1);
  CHECK(rep.obs_q50.size() == rep.times.size());
  CHECK(rep.band_q99.size() == rep.times.size());
  // Quantiles are ordered at every time point.
  for (std::size_t j = 0; j < rep.times.size(); ++j) {
    CHECK(rep.obs_q50[j] <= rep.obs_q90[j]);
    CHECK(rep.obs_q90[j] <= rep.obs_q99[j]);
    CHECK(rep.cir_q50[j] <= rep.cir_q90[j]);
  }
}

TEST_CASE("dominance: inflated observations are flagged") {
  CirParams p = reference_params();
  p.h = 0.01;
  RngStream obs_rng(41, 0);
  Eigen::MatrixXd observed = 10.0 * cir_simulate(p, obs_rng, 2000);
  RngStream cmp_rng(42, 0);
  DominanceReport rep =
      dominance_compare(observed, p.time_grid(), p, cmp_rng, 2000, 100);
  CHECK(rep.flagged_fraction > 0.8);
  CHECK(rep.flagged > 0);
}

TEST_CASE("dominance: mismatched grids are interpolated and noted") {
  CirParams p = reference_params();
  p.h = 0.1;
  RngStream obs_rng(51, 0);
  std::vector<double> odd_times{0.0, 0.15, 0.3, 0.45};
  Eigen::MatrixXd observed(100, 4);
  RngStream g(52, 0);
  for (int i = 0; i < 100; ++i)
    for (int j = 0; j < 4; ++j) observed(i, j) = p.y0 + 0.1 * g.next_uniform();
  DominanceReport rep = dominance_compare(observed, odd_times, p, obs_rng, 500, 50);
  CHECK(rep.interpolated);
  CHECK(rep.note.find("interpolated") != std::string::npos);

  // A coarse step appends the accuracy warning.
  CirParams coarse = p;
  coarse.h = 0.5;
  RngStream rng2(53, 0);
  DominanceReport rep2 = dominance_compare(observed, odd_times, coarse, rng2, 500, 50);
  CHECK(rep2.note.find("0.1/gamma") != std::string::npos);
}

TEST_CASE("process CSV carries hand-checkable quantiles") {
  std::vector<double> times{0.0, 0.5};
  Eigen::MatrixXd paths(2, 2);
  paths << 1.0, 5.0, 3.0, 7.0;
  std::string csv = process_to_csv(times, paths);
  std::istringstream in(csv);
  std::string line;
  REQUIRE(std::getline(in, line));
  CHECK(line == "time,q50,q90,q99,mean");
  REQUIRE(std::getline(in, line));
  // Column {1,3}: median 2, q90 = 2.8, q99 = 2.98, mean 2.
  CHECK(line.substr(0, 1) == "0");
  CHECK(line.find(",2,") != std::string::npos);
  REQUIRE(std::getline(in, line));
  CHECK(line.substr(0, 3) == "0.5");
  CHECK(!std::getline(in, line));  // exactly two data rows

  CHECK_THROWS_AS(process_to_csv(times, Eigen::MatrixXd::Ones(2, 3)),
                  std::invalid_argument);
}
