#pragma once

// Counter-based random number generation.
//
// Every consumer owns an RngStream identified by (seed, stream_id). The n-th
// draw from a stream is a pure function of (seed, stream_id, n): replaying a
// stream, skipping ahead, or drawing from parallel workers in any order all
// produce identical values. The generator is Philox4x64-10.

#include <array>
#include <cstdint>

#include <Eigen/Core>

namespace orbit {

class RngStream {
 public:
  RngStream() = default;
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t stream_id() const { return stream_id_; }

  // 128-bit position of the next draw.
  std::uint64_t counter_lo() const { return counter_lo_; }
  std::uint64_t counter_hi() const { return counter_hi_; }

  // Jump to an absolute draw index (low word only covers 2^64 draws, which
  // is far beyond any run here; the high word stays addressable for tests).
  void seek(std::uint64_t n_lo, std::uint64_t n_hi = 0) {
    counter_lo_ = n_lo;
    counter_hi_ = n_hi;
  }

  // Skip n draws.
  void advance(std::uint64_t n) {
    std::uint64_t lo = counter_lo_ + n;
    if (lo < counter_lo_) ++counter_hi_;
    counter_lo_ = lo;
  }

  // The four raw 64-bit words of block n (pure, does not move the counter).
  std::array<std::uint64_t, 4> block_at(std::uint64_t n_lo, std::uint64_t n_hi = 0) const;

  // Uniform draw on [0, 1) from the current counter position.
  double next_uniform();

  // Standard normal draw (Box-Muller on one counter block).
  double next_gaussian();

 private:
  std::uint64_t seed_ = 0;
  std::uint64_t stream_id_ = 0;
  std::uint64_t counter_lo_ = 0;
  std::uint64_t counter_hi_ = 0;

  void bump() { advance(1); }
};

// d-by-k matrix of independent N(0, stddev^2) entries, filled column-major
// with consecutive draws. Scaling by stddev is an exact final multiply, so
// gaussian_matrix(rng, r, c, s) == s * gaussian_matrix(rng', r, c, 1) bit for
// bit when both streams sit at the same position.
Eigen::MatrixXd gaussian_matrix(RngStream& rng, Eigen::Index rows, Eigen::Index cols,
                                double stddev = 1.0);

}  // namespace orbit
