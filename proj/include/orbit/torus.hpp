#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "orbit/types.hpp"

namespace orbit {

// Warm-up geometry in R^3: the loss measures squared distance to the unit
// circle in the xy-plane, whose level sets near the circle are tori.
struct TorusCoords {
  double s = 0.0;  // radial distance from the circle, >= 0
  double u = 0.0;  // angle along the circle, [0, 2*pi)
  double v = 0.0;  // angle in the normal plane, [0, 2*pi); 0 by convention at s = 0
};

// f(x) = (sqrt(x^2 + y^2) - 1)^2 + z^2. Points on the z-axis have no unique
// nearest circle point and are rejected with DegenerateProjection.
double torus_loss(const Eigen::Vector3d& x);
Eigen::Vector3d torus_gradient(const Eigen::Vector3d& x);

TorusCoords torus_coords(const Eigen::Vector3d& x);
Eigen::Vector3d torus_point(const TorusCoords& c);

// Numeric finite-difference determinant of the level map x -> (s, v)
// restricted to the complement of its kernel; equals 1/s. Throws
// std::domain_error at s = 0 (the map is singular on the circle).
double torus_normal_determinant(const Eigen::Vector3d& x);

struct TorusCheckResult {
  double lhs = 0.0;  // direct 3-d quadrature of chi against exp(-beta f)
  double rhs = 0.0;  // iterated (s,v)-outer / u-inner route with 1/det weights
  bool converged = true;  // Richardson agreement between two resolutions
  double richardson_rel = 0.0;
  std::string chi;
};

// chi is one of "one", "cos_u", "s2". Both sides are normalized
// expectations over the solid torus s <= s_max; the rhs evaluates the
// numeric normal determinant at every quadrature node while the lhs never
// uses it.
TorusCheckResult torus_decomposition_check(double beta, const std::string& chi, double s_max);

struct TorusSamples {
  std::vector<double> u, s, v;
};

// Euler-Maruyama Langevin chain on torus_loss started on the circle;
// records (u, s, v) of the retained iterates.
TorusSamples torus_langevin_samples(double beta, double h, long steps, long burnin, long thin,
                                    std::uint64_t seed);

// CSV with header `u,s,v`, one row per retained sample.
std::string torus_samples_to_csv(const TorusSamples& samples);

}  // namespace orbit
