#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "orbit/rng.hpp"

namespace orbit {

// Square-root diffusion dY = (n_tilde - gamma * Y) dt + sqrt(Y) dB.
struct CirParams {
  double gamma = 1.0;    // mean-reversion rate
  double n_tilde = 0.0;  // constant drift term
  double y0 = 0.0;       // initial value
  double h = 1e-3;       // simulation step
  double horizon = 1.0;  // total simulated time

  void validate() const;

  // Step sizes above 0.1/gamma are simulated but flagged as inaccurate.
  bool accuracy_warning() const { return h > 0.1 / gamma; }

  // Number of stored time points, t_j = j*h for j = 0..time_points()-1.
  int time_points() const;
  std::vector<double> time_grid() const;
};

// Closed-form mean y0*exp(-gamma t) + (n_tilde/gamma)(1 - exp(-gamma t)).
double cir_mean_closed_form(const CirParams& params, double t);

// Euler-Maruyama with full truncation: the diffusion coefficient reads the
// positive part of the current value, and negative proposals are clipped to
// zero. Returns paths x time_points.
Eigen::MatrixXd cir_simulate(const CirParams& params, RngStream& rng, int paths);

// Exact-in-distribution representation as a sum of squared
// Ornstein-Uhlenbeck components dZ_i = -(gamma/2) Z_i dt + (1/2) dB_i with
// equal initial split of y0. OU transitions are sampled exactly, so the only
// error is Monte Carlo. Requires n_tilde/2 to be a positive integer.
Eigen::MatrixXd ou_squares_simulate(const CirParams& params, RngStream& rng, int paths);

struct EnvelopeResult {
  double empirical_quantile = 0.0;  // (1-eps) quantile of sup_{t<=horizon} Y_t
  double analytic_envelope = 0.0;   // 4*sqrt(y0^2 + n_tilde*log(1/eps)/gamma)
};

// confidence = 1 - eps; the empirical side uses `paths` simulated paths.
EnvelopeResult cir_envelope_quantile(const CirParams& params, double confidence,
                                     double horizon, RngStream& rng, int paths = 10000);

struct DominanceReport {
  std::vector<double> times;  // the observed grid
  std::vector<double> obs_q50, obs_q90, obs_q99;
  std::vector<double> cir_q50, cir_q90, cir_q99;
  std::vector<double> band_q50, band_q90, band_q99;  // bootstrap standard errors
  std::vector<int> flags;                            // 1 when any quantile exceeds its band
  int flagged = 0;
  double flagged_fraction = 0.0;
  bool interpolated = false;  // CIR grid resampled onto the observed grid
  std::string note;
};

// Marginal-quantile dominance check: flags a time point when an observed
// quantile (50/90/99%) exceeds the matching CIR quantile by more than three
// bootstrap standard errors. observed is paths x time points on
// observed_times; a grid mismatch with the CIR step grid is handled by
// linear interpolation and noted in the report.
DominanceReport dominance_compare(const Eigen::MatrixXd& observed,
                                  const std::vector<double>& observed_times,
                                  const CirParams& params, RngStream& rng,
                                  int sim_paths = 10000, int bootstrap_rounds = 200);

// CSV with header `time,q50,q90,q99,mean`, one row per time point of the
// paths x time_points matrix.
std::string process_to_csv(const std::vector<double>& times, const Eigen::MatrixXd& paths);

}  // namespace orbit
