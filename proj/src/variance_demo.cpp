#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "milb/acquisition.hpp"

namespace milb {

namespace {

constexpr std::size_t kHistogramBins = 1024;

struct ArcSample {
  std::vector<double> angle;  // in [0, 2 pi)
  double trace_variance;
};

template <class Draw>
ArcSample draw_arc(std::size_t n, Draw&& draw) {
  ArcSample out;
  out.angle.resize(n);
  double sx = 0.0, sy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double theta = std::fmod(draw(), 2.0 * std::numbers::pi);
    if (theta < 0.0) theta += 2.0 * std::numbers::pi;
    out.angle[i] = theta;
    const double x = std::cos(theta), y = std::sin(theta);
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
  }
  const double nn = static_cast<double>(n);
  out.trace_variance = (sxx - sx * sx / nn + syy - sy * sy / nn) / (nn - 1.0);
  return out;
}

// Plug-in histogram entropy on [0, 2 pi) with the Miller-Madow correction.
double histogram_entropy(const std::vector<double>& angle) {
  std::vector<std::size_t> counts(kHistogramBins, 0);
  const double width = 2.0 * std::numbers::pi / static_cast<double>(kHistogramBins);
  for (double theta : angle) {
    auto bin = static_cast<std::size_t>(theta / width);
    if (bin >= kHistogramBins) bin = kHistogramBins - 1;
    ++counts[bin];
  }
  const double n = static_cast<double>(angle.size());
  double h = 0.0;
  std::size_t occupied = 0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    ++occupied;
    const double p = static_cast<double>(c) / n;
    h -= p * std::log(p / width);
  }
  return h + static_cast<double>(occupied - 1) / (2.0 * n);
}

}  // namespace

VarianceDemoReport variance_failure_demo(double delta, std::size_t n_samples, RngStream& stream) {
  if (!(delta > 0.0) || !(delta < std::numbers::pi / 2.0))
    throw std::invalid_argument("variance_failure_demo: delta must lie in (0, pi/2)");
  if (n_samples < 2) throw std::invalid_argument("variance_failure_demo: need at least two samples");
  RngStream circle_stream = stream.split(0);
  RngStream caps_stream = stream.split(1);
  const ArcSample circle = draw_arc(n_samples, [&] { return uniform(circle_stream, 0.0, 2.0 * std::numbers::pi); });
  const ArcSample caps = draw_arc(n_samples, [&] {
    const double pole = caps_stream.next_double() < 0.5 ? std::numbers::pi / 2.0 : -std::numbers::pi / 2.0;
    return pole + uniform(caps_stream, -delta, delta);
  });

  VarianceDemoReport r{};
  r.delta = delta;
  r.trace_variance_circle = circle.trace_variance;
  r.trace_variance_caps = caps.trace_variance;
  r.entropy_circle = std::log(2.0 * std::numbers::pi);
  r.entropy_caps = std::log(4.0 * delta);
  r.entropy_gap = r.entropy_circle - r.entropy_caps;

  // Arc-length densities are 1/(2 pi) on the circle and 1/(4 delta) on the caps.
  // A draw outside the caps has density 0 and makes the estimate infinite.
  const double circle_nll = std::log(2.0 * std::numbers::pi) * static_cast<double>(n_samples);
  double caps_nll = 0.0;
  for (double theta : caps.angle) {
    const double from_pole =
        std::min(std::abs(theta - std::numbers::pi / 2.0), std::abs(theta - 1.5 * std::numbers::pi));
    caps_nll -= from_pole <= delta + 1e-12 ? -std::log(4.0 * delta) : -std::numeric_limits<double>::infinity();
  }
  const double n = static_cast<double>(n_samples);
  r.entropy_gap_mc = circle_nll / n - caps_nll / n;
  r.entropy_gap_histogram = histogram_entropy(circle.angle) - histogram_entropy(caps.angle);

  const double expected = std::log(2.0 * std::numbers::pi) - std::log(4.0 * delta);
  r.passed = std::abs(r.trace_variance_circle - 1.0) <= 0.01 && std::abs(r.trace_variance_caps - 1.0) <= 0.01 &&
             std::abs(r.entropy_gap - expected) <= 1e-3 && std::abs(r.entropy_gap_mc - expected) <= 1e-3 &&
             std::abs(r.trace_variance_circle - r.trace_variance_caps) <= 0.01;
  return r;
}

}  // namespace milb
