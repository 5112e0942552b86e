#pragma once

// Measurement operators, the quartic loss f(X) = |A(X X^T) - b|^2, its
// gradient, and posterior instance generation plus JSON serialization.

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "orbit/rng.hpp"
#include "orbit/types.hpp"

namespace orbit {

enum class OperatorVariant { Factorization, Sensing, Completion };

std::string variant_name(OperatorVariant v);
OperatorVariant variant_from_name(const std::string& name);

// One observed coordinate of a completion mask.
struct MaskEntry {
  int i = 0;
  int j = 0;
  friend bool operator==(const MaskEntry&, const MaskEntry&) = default;
};

// Linear map A acting on d-by-d matrices.
//  Factorization: A(M) = vec(M), column-major, length d^2.
//  Sensing:       A(M)_i = Tr(A_i^T M), i = 1..L.
//  Completion:    A(M) = (M_ij for (i,j) in mask), mask sorted row-major.
struct MeasurementOperator {
  OperatorVariant variant = OperatorVariant::Factorization;
  int d = 1;
  std::vector<Eigen::MatrixXd> sensing_mats;  // Sensing only
  std::vector<MaskEntry> mask;                // Completion only, sorted row-major
  double p = 0.0;                             // Completion draw probability

  int output_dim() const;
};

Eigen::VectorXd apply_operator(const MeasurementOperator& op, const Eigen::MatrixXd& M);

// Adjoint of apply_operator: <A(M), v> = <M, A*(v)> for all M, v.
Eigen::MatrixXd adjoint_operator(const MeasurementOperator& op, const Eigen::VectorXd& v);

// A sampling problem: planted factor, measurements, and inverse temperature.
struct Instance {
  Dims dims;
  SpectrumSpec spectrum;
  MeasurementOperator op;
  Eigen::MatrixXd x_star;  // d x k, singular values equal to spectrum
  Eigen::VectorXd b;       // A(X* X*^T) + noise, noise i.i.d. N(0, 1/beta)
  double beta = 1.0;
  std::uint64_t seed = 0;
  double incoherence_mu = 0.0;  // (d/k) max_i |e_i^T U|^2 from the SVD of X* X*^T
};

double loss(const Instance& inst, const Eigen::MatrixXd& X);

// grad f(X) = 2 (G + G^T) X with G = A*(A(X X^T) - b). The constant is fixed
// by agreement with central finite differences of loss().
Eigen::MatrixXd gradient(const Instance& inst, const Eigen::MatrixXd& X);

struct GenerateOptions {
  int L = 0;                          // Sensing: number of measurements
  double p = 0.0;                     // Completion: per-entry probability
  bool regenerate_empty_mask = true;  // Completion: retry with a salted stream
};

// Deterministic instance construction: X* = U diag(spectrum) V^T with Haar
// U (d x k) and V (k x k); sensing matrices i.i.d. N(0, 1/L) entries;
// completion mask i.i.d. Bernoulli(p); b = A(X* X*^T) + N(0, 1/beta) noise.
// Every random object is a pure function of the seed.
Instance generate_instance(const Dims& dims, const SpectrumSpec& spectrum,
                           OperatorVariant variant, const GenerateOptions& opts,
                           double beta, std::uint64_t seed);

// Convenience overload consuming a stream's seed.
inline Instance generate_instance(const Dims& dims, const SpectrumSpec& spectrum,
                                  OperatorVariant variant, const GenerateOptions& opts,
                                  double beta, const RngStream& rng) {
  return generate_instance(dims, spectrum, variant, opts, beta, rng.seed());
}

// Instance JSON: {dims, spectrum, variant, variant_params, x_star (row-major),
// b, beta, seed, incoherence_mu}; doubles with 17 significant digits. Sensing
// matrices are regenerated from the seed on load; completion masks are stored.
std::string instance_to_json(const Instance& inst);
Instance instance_from_json(const std::string& json_text);
void save_instance(const Instance& inst, const std::string& path);
Instance load_instance(const std::string& path);

// Haar-distributed orthonormal d-by-k frame via QR with a deterministic sign
// convention (R diagonal made positive).
Eigen::MatrixXd haar_frame(RngStream& rng, int d, int k);

// (d/k) max_i |e_i^T U|^2 for U the left singular frame of x_star.
double incoherence(const Eigen::MatrixXd& x_star);

// Internal stream ids used by generate_instance and initialization; fixed so
// files can be regenerated from the stored seed alone.
inline constexpr std::uint64_t kStreamXStar = 1000;
inline constexpr std::uint64_t kStreamOperator = 1001;
inline constexpr std::uint64_t kStreamNoise = 1002;
inline constexpr std::uint64_t kStreamInit = 1003;

}  // namespace orbit
