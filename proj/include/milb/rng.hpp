#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace milb {

/// Counter-based random stream (Philox4x32-10).
///
/// A stream is identified by (seed, stream_id); the n-th draw is a pure
/// function of (seed, stream_id, n), so streams can be split per ensemble
/// member or per round without coupling their sequences. Streams are
/// value types: copying one duplicates its position.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed, std::uint64_t stream_id = 0);

  /// Child stream keyed by (seed, hash(stream_id, child)). Does not advance
  /// this stream.
  [[nodiscard]] RngStream split(std::uint64_t child) const;

  std::uint64_t next_u64();
  /// Uniform double in [0, 1) with 53 random bits.
  double next_double();

  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] std::uint64_t stream_id() const { return stream_id_; }
  /// Number of 64-bit words drawn so far.
  [[nodiscard]] std::uint64_t position() const { return position_; }

 private:
  void refill();

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::uint64_t position_ = 0;
  std::array<std::uint64_t, 2> buffer_{};
};

/// Raw Philox4x32-10 block function, exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> counter,
                                        std::array<std::uint32_t, 2> key);

double uniform(RngStream& stream, double lo, double hi);
double std_normal(RngStream& stream);
double normal(RngStream& stream, double mean, double stddev);
/// Standard Gumbel variate -log(-log U) with U kept strictly inside (0, 1).
double gumbel(RngStream& stream);
/// Gamma(shape, 1) via Marsaglia-Tsang.
double gamma(RngStream& stream, double shape);
std::vector<double> dirichlet(RngStream& stream, std::span<const double> alpha);

}  // namespace milb
