#include "orbit/rng.hpp"

#include <cmath>
#include <numbers>

namespace orbit {
namespace {

// Philox4x64 round constants (multipliers and Weyl key increments).
constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ULL;
constexpr std::uint64_t kMul1 = 0xCA5A826395121157ULL;
constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ULL;
constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73BULL;

inline std::uint64_t mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi) {
  unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
  hi = static_cast<std::uint64_t>(p >> 64);
  return static_cast<std::uint64_t>(p);
}

std::array<std::uint64_t, 4> philox4x64_10(std::array<std::uint64_t, 4> c,
                                           std::array<std::uint64_t, 2> k) {
  for (int round = 0; round < 10; ++round) {
    std::uint64_t hi0, hi1;
    std::uint64_t lo0 = mulhilo(kMul0, c[0], hi0);
    std::uint64_t lo1 = mulhilo(kMul1, c[2], hi1);
    c = {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    k[0] += kWeyl0;
    k[1] += kWeyl1;
  }
  return c;
}

// Map the top 53 bits of a word to [0, 1).
inline double to_unit(std::uint64_t w) {
  return static_cast<double>(w >> 11) * 0x1.0p-53;
}

}  // namespace

std::array<std::uint64_t, 4> RngStream::block_at(std::uint64_t n_lo, std::uint64_t n_hi) const {
  return philox4x64_10({n_lo, n_hi, 0, 0}, {seed_, stream_id_});
}

double RngStream::next_uniform() {
  auto w = block_at(counter_lo_, counter_hi_);
  bump();
  return to_unit(w[0]);
}

double RngStream::next_gaussian() {
  auto w = block_at(counter_lo_, counter_hi_);
  bump();
  // u1 lies in (0, 1] so the log is finite; u2 lies in [0, 1).
  double u1 = (static_cast<double>(w[0] >> 11) + 1.0) * 0x1.0p-53;
  double u2 = to_unit(w[1]);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Eigen::MatrixXd gaussian_matrix(RngStream& rng, Eigen::Index rows, Eigen::Index cols,
                                double stddev) {
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) out(i, j) = rng.next_gaussian() * stddev;
  return out;
}

}  // namespace orbit
