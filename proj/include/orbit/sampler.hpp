#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "orbit/operators.hpp"
#include "orbit/rng.hpp"
#include "orbit/types.hpp"

namespace orbit {

// Differentiable scalar field over d x k matrices; the stepper is generic so
// tests can drive it with analytically solvable potentials.
struct Potential {
  virtual ~Potential() = default;
  virtual double value(const Eigen::MatrixXd& X) const = 0;
  virtual Eigen::MatrixXd gradient_at(const Eigen::MatrixXd& X) const = 0;
};

struct InstancePotential final : Potential {
  const Instance* inst;
  explicit InstancePotential(const Instance& i) : inst(&i) {}
  double value(const Eigen::MatrixXd& X) const override { return loss(*inst, X); }
  Eigen::MatrixXd gradient_at(const Eigen::MatrixXd& X) const override {
    return gradient(*inst, X);
  }
};

struct ChainState {
  Eigen::MatrixXd x;
  long long step_index = 0;
  RngStream rng;

  ChainState() : rng(0, 0) {}
  ChainState(Eigen::MatrixXd x_in, RngStream rng_in, long long step = 0)
      : x(std::move(x_in)), step_index(step), rng(rng_in) {}
};

struct TrajectoryRecord {
  long long step = 0;
  double time = 0.0;
  bool has_x = false;
  Eigen::MatrixXd x;  // populated only when the caller asked to store iterates
  double eta = 0.0;
  double f_value = 0.0;
  int branch = 0;  // nearest branch; 0 when the projection is degenerate
  bool has_angle = false;
  double angle = 0.0;  // orbit angle of the home-branch rotation, k = 2 only
  double s_norm = 0.0;
  double y_norm = 0.0;
};

struct Trajectory {
  int chain_id = 0;
  int home_branch = 1;  // branch nearest to the start point
  std::vector<TrajectoryRecord> records;
  bool diverged = false;
  long long diverged_at_step = -1;
  std::string note;
};

// One Euler-Maruyama update X - h*beta*grad(X) + sqrt(2h)*noise_scale*xi,
// with xi a standard Gaussian matrix drawn from the state's stream.
// noise_scale exists as a test hook; 0 gives plain gradient descent with
// rate h*beta. Throws DivergedChain on a non-finite result.
ChainState langevin_step(const Potential& pot, double beta, double h, ChainState state,
                         double noise_scale = 1.0);

// Instance-bound form; additionally treats ||X||_F > 1e6 * ||X*||_F as
// divergence to fail fast.
ChainState langevin_step(const Instance& inst, const RunConfig& cfg, ChainState state,
                         double noise_scale = 1.0);

// Gradient descent with backtracking line search from a small Gaussian
// start. When the gradient norm falls below tol at a point still far from
// both branches, injects an isotropic perturbation of norm tol and
// continues. Returns a point with gradient norm <= tol; throws InitFailed
// after max_iters iterations.
Eigen::MatrixXd init_gradient_descent(const Instance& inst, RngStream& rng, double tol,
                                      long long max_iters);

// Runs cfg.chains independent chains from x0, chain c using stream_id = c.
// Records are kept for steps i with i >= burnin and (i - burnin) % thin == 0.
// A diverging chain yields a truncated, flagged trajectory; the others are
// unaffected. Output is identical for any thread count.
std::vector<Trajectory> run_chains(const Instance& inst, const RunConfig& cfg,
                                   const Eigen::MatrixXd& x0, int threads = 1,
                                   bool store_x = false);

// CSV export, header `step,time,eta,f,branch,angle,s_norm,y_norm`; the angle
// field is left empty unless the record carries one.
std::string trajectory_to_csv(const Trajectory& traj);

}  // namespace orbit
