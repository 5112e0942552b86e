#pragma once

// Shared problem-size types, run configuration, and error taxonomy.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace orbit {

// Projection onto an orbit is not uniquely defined (rank-deficient cross
// matrix between the point and the reference factor).
struct DegenerateProjection : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A point handed to the normal-coordinate chart lies outside the tube in
// which the chart is a bijection.
struct TubeExceeded : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A Langevin iterate became non-finite or left the guard ball.
struct DivergedChain : std::runtime_error {
  long step;
  double norm;
  DivergedChain(long step_, double norm_)
      : std::runtime_error("chain diverged at step " + std::to_string(step_) +
                           " (|X|_F = " + std::to_string(norm_) + ")"),
        step(step_),
        norm(norm_) {}
};

// Gradient-descent initialization failed to reach the requested tolerance.
struct InitFailed : std::runtime_error {
  double grad_norm;
  InitFailed(const std::string& msg, double grad_norm_)
      : std::runtime_error(msg), grad_norm(grad_norm_) {}
};

// The requested diagnostic is not defined for the given problem size (for
// example, angle-based uniformity needs k = 2).
struct Unsupported : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Factor sizes. X is d-by-k with k <= d; the ambient dimension N and the
// orbit dimension m are always derived, never stored.
struct Dims {
  int d = 1;
  int k = 1;

  Dims() = default;
  Dims(int d_, int k_) : d(d_), k(k_) { validate(); }

  void validate() const {
    if (k < 1 || d < k)
      throw std::invalid_argument("Dims: need 1 <= k <= d, got d=" +
                                  std::to_string(d) + " k=" + std::to_string(k));
  }

  int ambient() const { return d * k; }            // N = d*k
  int orbit_dim() const { return k * (k - 1) / 2; }  // m = dim SO(k)
};

// Target singular values of the planted factor, nonincreasing and positive.
struct SpectrumSpec {
  std::vector<double> values;

  SpectrumSpec() = default;
  explicit SpectrumSpec(std::vector<double> v) : values(std::move(v)) { validate(); }

  void validate() const {
    if (values.empty()) throw std::invalid_argument("SpectrumSpec: empty");
    double prev = values.front();
    for (double s : values) {
      if (!(s > 0.0))
        throw std::invalid_argument("SpectrumSpec: singular values must be positive");
      if (s > prev + 1e-15)
        throw std::invalid_argument("SpectrumSpec: singular values must be nonincreasing");
      prev = s;
    }
  }

  double sigma_min() const { return values.back(); }
  double sigma_max() const { return values.front(); }
  double kappa() const { return sigma_max() / sigma_min(); }
};

// Sampler run parameters. Seeds are mandatory everywhere; nothing in the
// library reads a clock.
struct RunConfig {
  double beta = 1.0;       // inverse temperature
  double h = 1e-4;         // step size
  long steps = 1000;       // total Euler steps per chain
  long burnin = -1;        // steps discarded before recording; -1 = steps/10
  long thin = 10;          // record every thin-th step after burn-in
  int chains = 1;
  std::uint64_t seed = 0;
  double epsilon = 0.01;   // failure-probability knob used by radius helpers

  long effective_burnin() const { return burnin >= 0 ? burnin : steps / 10; }

  void validate() const {
    if (!(beta > 0.0)) throw std::invalid_argument("RunConfig: beta must be > 0");
    if (!(h > 0.0)) throw std::invalid_argument("RunConfig: h must be > 0");
    if (steps <= 0) throw std::invalid_argument("RunConfig: steps must be > 0");
    if (effective_burnin() >= steps)
      throw std::invalid_argument("RunConfig: burnin must be < steps");
    if (thin < 1) throw std::invalid_argument("RunConfig: thin must be >= 1");
    if (chains < 1) throw std::invalid_argument("RunConfig: chains must be >= 1");
    if (!(epsilon > 0.0 && epsilon < 1.0))
      throw std::invalid_argument("RunConfig: epsilon must be in (0,1)");
  }
};

}  // namespace orbit
