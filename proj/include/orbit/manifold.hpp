#pragma once

#include <vector>

#include <Eigen/Core>

#include "orbit/types.hpp"

namespace orbit {

// A reference point on one connected component of the set {x0 * U : U
// orthogonal}. branch 1 selects det(U) = +1, branch 2 selects det(U) = -1.
struct OrbitSpec {
  Eigen::MatrixXd x0;
  int branch = 1;

  OrbitSpec() = default;
  OrbitSpec(Eigen::MatrixXd x0_in, int branch_in = 1);

  int d() const { return static_cast<int>(x0.rows()); }
  int k() const { return static_cast<int>(x0.cols()); }

  // Smallest singular value of x0; positive because x0 has full column rank.
  double sigma_min() const;

  void validate() const;
};

struct ProjectionResult {
  Eigen::MatrixXd pi_x;  // nearest point on the requested branch, x0 * u
  Eigen::MatrixXd u;     // k x k orthogonal, det sign fixed by the branch
  int branch = 1;
  double distance = 0.0;  // Frobenius distance to pi_x
};

struct NormalCoordinates {
  Eigen::MatrixXd s;  // k x k symmetric
  Eigen::MatrixXd y;  // d x k with x0^T y = 0
  Eigen::MatrixXd u;  // k x k orthogonal, the along-manifold coordinate
};

struct NormalDeterminantInfo {
  double value = 0.0;
  double condition = 0.0;  // sigma_max / sigma_min of the restricted Jacobian
  bool condition_warning = false;
};

// Branch-constrained orthogonal Procrustes projection. Throws
// DegenerateProjection when X^T x0 is rank deficient (the minimizer is not
// unique there).
ProjectionResult project_to_orbit(const OrbitSpec& spec, const Eigen::MatrixXd& X);

// Squared Frobenius distance to the requested branch.
double eta(const OrbitSpec& spec, const Eigen::MatrixXd& X);

// Orthonormal basis (Frobenius inner product) of the tangent space at an
// on-orbit point; k(k-1)/2 matrices. Throws std::domain_error when
// eta(X) >= 1e-16 * ||X||_F^2.
std::vector<Eigen::MatrixXd> tangent_basis(const OrbitSpec& spec,
                                           const Eigen::MatrixXd& X_on_orbit);

// Orthonormal basis of the normal space at an on-orbit point;
// d*k - k(k-1)/2 matrices, each orthogonal to every tangent vector.
std::vector<Eigen::MatrixXd> normal_basis(const OrbitSpec& spec,
                                          const Eigen::MatrixXd& X_on_orbit);

// Lower bound 2 sigma_min / k on the distance between the two branches.
double separation_lower_bound(const OrbitSpec& spec);

// Radius 2 sigma_min / (k D) below which projection along a normal ray is
// stable; D is the working distance bound.
double tubular_radius(const OrbitSpec& spec, double D);

// Normal-coordinate chart: X = (x0 + x0 (x0^T x0)^{-1} S + Y) U with S
// symmetric and x0^T Y = 0. Throws TubeExceeded when the distance to the
// branch exceeds tube_radius (negative tube_radius selects the default
// tubular_radius(spec, 2)). Degenerate projections propagate.
NormalCoordinates decompose(const OrbitSpec& spec, const Eigen::MatrixXd& X,
                            double tube_radius = -1.0);

// Inverse of decompose: (x0 + x0 (x0^T x0)^{-1} s + y) u. Inputs are assumed
// to satisfy the NormalCoordinates invariants; no checks are performed.
Eigen::MatrixXd recompose(const OrbitSpec& spec, const NormalCoordinates& coords);

// |det| of the level-set map X -> (S, Y) restricted to the orthogonal
// complement of its kernel, computed by central finite differences with step
// 1e-5 * ||X||_F along the standard ambient basis. The (S, Y) output is read
// in Frobenius-orthonormal coordinates.
double normal_determinant(const OrbitSpec& spec, const Eigen::MatrixXd& X);

// Same computation, also reporting the restricted Jacobian's condition
// number; condition_warning is set when it exceeds 1e8.
NormalDeterminantInfo normal_determinant_full(const OrbitSpec& spec,
                                              const Eigen::MatrixXd& X);

// Closed-form value of the normal determinant for this chart: with
// eigenvalues l_a of x0^T x0, the product over a of sqrt(l_a) times the
// product over a < b of sqrt(2 l_a l_b / (l_a + l_b)). Constant over the
// tube to leading order and equal to 1 when x0 has orthonormal columns.
double normal_determinant_closed_form(const OrbitSpec& spec);

// Simplified Kronecker-style expression sqrt(det(I_k kron (x0^T x0)^{-1})).
// Agrees with the closed form exactly when x0^T x0 = I; kept for comparison
// tests at unit spectrum.
double normal_determinant_kron_form(const OrbitSpec& spec);

}  // namespace orbit
