#include "milb/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace milb {

namespace {

constexpr std::uint32_t kPhiloxM0 = 0xD2511F53u;
constexpr std::uint32_t kPhiloxM1 = 0xCD9E8D57u;
constexpr std::uint32_t kPhiloxW0 = 0x9E3779B9u;
constexpr std::uint32_t kPhiloxW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi,
                    std::uint32_t& lo) {
  const std::uint64_t product = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(product >> 32);
  lo = static_cast<std::uint32_t>(product);
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

std::array<std::uint32_t, 4> philox4x32(std::array<std::uint32_t, 4> ctr,
                                        std::array<std::uint32_t, 2> key) {
  for (int round = 0; round < 10; ++round) {
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kPhiloxM0, ctr[0], hi0, lo0);
    mulhilo(kPhiloxM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += kPhiloxW0;
    key[1] += kPhiloxW1;
  }
  return ctr;
}

RngStream::RngStream(std::uint64_t seed, std::uint64_t stream_id)
    : seed_(seed), stream_id_(stream_id) {}

RngStream RngStream::split(std::uint64_t child) const {
  return RngStream(seed_, splitmix64(splitmix64(stream_id_) ^ (child + 0x632BE59BD9B4E019ull)));
}

void RngStream::refill() {
  const std::uint64_t block = position_ / 2;
  const std::array<std::uint32_t, 4> counter = {
      static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
      static_cast<std::uint32_t>(stream_id_), static_cast<std::uint32_t>(stream_id_ >> 32)};
  const std::array<std::uint32_t, 2> key = {static_cast<std::uint32_t>(seed_),
                                            static_cast<std::uint32_t>(seed_ >> 32)};
  const auto out = philox4x32(counter, key);
  buffer_[0] = (static_cast<std::uint64_t>(out[1]) << 32) | out[0];
  buffer_[1] = (static_cast<std::uint64_t>(out[3]) << 32) | out[2];
}

std::uint64_t RngStream::next_u64() {
  if (position_ % 2 == 0) refill();
  return buffer_[position_++ % 2];
}

double RngStream::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double uniform(RngStream& stream, double lo, double hi) {
  if (!(lo < hi)) throw std::invalid_argument("uniform: require lo < hi");
  const double value = lo + (hi - lo) * stream.next_double();
  // Rounding in lo + (hi - lo) * u can land exactly on hi.
  return value < hi ? value : std::nextafter(hi, lo);
}

double std_normal(RngStream& stream) {
  // Box-Muller, cosine branch only; u1 in (0, 1].
  const double u1 = 1.0 - stream.next_double();
  const double u2 = stream.next_double();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
}

double normal(RngStream& stream, double mean, double stddev) {
  return mean + stddev * std_normal(stream);
}

double gumbel(RngStream& stream) {
  constexpr double kTiny = 0x1.0p-60;
  double u = stream.next_double();
  if (u < kTiny) u = kTiny;
  return -std::log(-std::log(u));
}

double gamma(RngStream& stream, double shape) {
  if (!(shape > 0.0)) throw std::invalid_argument("gamma: shape must be positive");
  if (shape < 1.0) {
    // Gamma(a) = Gamma(a + 1) * U^(1/a) for a < 1.
    const double u = 1.0 - stream.next_double();
    return gamma(stream, shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = std_normal(stream);
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = 1.0 - stream.next_double();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

std::vector<double> dirichlet(RngStream& stream, std::span<const double> alpha) {
  if (alpha.empty()) throw std::invalid_argument("dirichlet: empty concentration vector");
  for (double a : alpha) {
    if (!(a > 0.0) || !std::isfinite(a))
      throw std::invalid_argument("dirichlet: concentration parameters must be positive");
  }
  std::vector<double> draw(alpha.size());
  double total = 0.0;
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    draw[i] = gamma(stream, alpha[i]);
    total += draw[i];
  }
  if (!(total > 0.0)) {
    // Every gamma underflowed (tiny shapes); fall back to a uniform pick.
    std::fill(draw.begin(), draw.end(), 0.0);
    draw[static_cast<std::size_t>(stream.next_double() * alpha.size())] = 1.0;
    return draw;
  }
  for (double& d : draw) d /= total;
  return draw;
}

}  // namespace milb
