#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

#include "orbit/manifold.hpp"
#include "orbit/operators.hpp"
#include "orbit/sampler.hpp"

namespace orbit {

struct NearnessResult {
  double fraction_inside = 0.0;  // fraction of records with sqrt(eta) <= radius
  double max_eta = 0.0;
  long flips = 0;  // nearest-branch changes between consecutive records
};

NearnessResult nearness_check(const Trajectory& traj, double radius);

// KS distance between recorded orbit angles and Uniform[0, 2*pi). Throws
// Unsupported when the trajectory carries no angle (k != 2) and
// std::invalid_argument when fewer than 1000 records are available.
double orbit_uniformity(const Trajectory& traj);

// Same test on a raw angle sample.
double ks_uniform_angles(std::vector<double> angles);

struct GradCorrResult {
  double violation_fraction = 0.0;
  double c1 = 0.0;     // fixed curvature constant in c1 * sigma_min^2
  double c2 = 0.0;     // fitted noise constant multiplying the variant shape
  double shape = 0.0;  // variant-dependent noise shape value
  long n = 0;
};

// Checks <grad f(X), X - Pi(X)> >= c1 sigma_min^2 eta - c2 * shape across
// the samples. c1 is fixed at 1/16; c2 is fitted as the 95th percentile of
// the per-sample requirement, so the violation fraction is at most about
// 0.05 when the functional form holds. shape is k^2 kappa^2 d / beta^2 for
// factorization, d k kappa^2 log L / beta^2 for sensing, and
// d kappa^2 k^3 log d / (p beta^2) for completion.
GradCorrResult grad_correlation_check(const Instance& inst, const OrbitSpec& spec,
                                      const std::vector<Eigen::MatrixXd>& samples);

struct IactResult {
  double value = 0.5;
  std::string note;
};

// Integrated autocorrelation time with the initial-positive-sequence
// truncation on lag-pair sums, normalized so an i.i.d. series gives 0.5.
// Values below 0.5 (anticorrelation) and degenerate series are clamped to
// 0.5 with a note. Requires length >= 1000.
IactResult iact(const std::vector<double>& series);

struct CirFit {
  double gamma_hat = 0.0;
  double n_tilde_hat = 0.0;
};

struct DiagnosticsReport {
  double nearness_fraction = 0.0;
  double max_eta = 0.0;
  double tube_radius_used = 0.0;
  long branch_flips = 0;
  double ks_uniform_angle = -1.0;  // -1 when the angle chart is unavailable
  double f_constancy_cv = -1.0;
  double det_constancy_cv = -1.0;
  double grad_corr_violations = -1.0;
  double iact_eta = -1.0;
  double iact_angle = -1.0;
  CirFit cir_fit;
  std::vector<std::string> notes;
};

// Coefficient of variation of the loss over `rotations` same-(S,Y) orbit
// copies X * U of one point; exact invariance makes this roundoff-small.
double loss_constancy_cv(const Instance& inst, const Eigen::MatrixXd& X, int rotations,
                         RngStream& rng);

// Deterministic tube points at distance <= radius from the branch: random
// symmetric S / orthogonal-complement Y displacements recomposed with Haar
// rotations on the requested branch.
std::vector<Eigen::MatrixXd> synthetic_tube_points(const OrbitSpec& spec, double radius,
                                                   int count, RngStream& rng);

// Aggregates every diagnostic over the trajectories. Component failures are
// recorded in notes instead of aborting. tube_radius < 0 selects the default
// tubular_radius(spec, 2) for the home branch; extra_tube_points, when
// nonempty, are used for the determinant/loss-constancy/gradient checks in
// place of synthetic ones.
DiagnosticsReport assemble_report(const Instance& inst, const std::vector<Trajectory>& trajs,
                                  double tube_radius = -1.0,
                                  const std::vector<Eigen::MatrixXd>& extra_tube_points = {});

std::string report_to_json(const DiagnosticsReport& rep);
DiagnosticsReport report_from_json(const std::string& json_text);

}  // namespace orbit
