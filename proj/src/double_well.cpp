#include <cmath>
#include <stdexcept>

#include "milb/benchmarks.hpp"

namespace milb {

DoubleWellSystem::DoubleWellSystem(const DoubleWellParams& params) : p_(params) {
  if (p_.n_particles == 0 || p_.n_snap == 0 || !(p_.dt > 0.0) || !(p_.t_final > 0.0))
    throw std::invalid_argument("DoubleWellSystem: invalid parameters");
  n_steps_ = static_cast<std::size_t>(std::llround(p_.t_final / p_.dt));
  if (n_steps_ % p_.n_snap != 0)
    throw std::invalid_argument("DoubleWellSystem: step count must divide evenly into snapshots");
}

std::vector<std::size_t> DoubleWellSystem::snapshot_steps() const {
  std::vector<std::size_t> steps;
  for (std::size_t s = 1; s <= p_.n_snap; ++s) steps.push_back(n_steps_ * s / p_.n_snap);
  return steps;
}

double DoubleWellSystem::potential(double q) const { return p_.a * (0.25 * q * q * q * q - 0.5 * q * q); }

Eigen::VectorXd DoubleWellSystem::sample_input(RngStream& stream) const {
  Eigen::VectorXd x(static_cast<Eigen::Index>(input_dim()));
  const auto n = static_cast<Eigen::Index>(p_.n_particles);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = uniform(stream, p_.q0_lo, p_.q0_hi);
  x[n] = uniform(stream, p_.sigma_lo, p_.sigma_hi);
  x[n + 1] = p_.kappa_hi > p_.kappa_lo ? uniform(stream, p_.kappa_lo, p_.kappa_hi) : p_.kappa_lo;
  return x;
}

Eigen::VectorXd DoubleWellSystem::simulate(std::span<const double> x, RngStream& stream) const {
  if (x.size() != input_dim()) throw DimensionError("DoubleWellSystem: input dimension mismatch");
  const std::size_t n = p_.n_particles;
  const double sigma = x[n];
  const double kappa = x[n + 1];
  if (!(sigma > 0.0)) throw std::invalid_argument("DoubleWellSystem: sigma must be positive");

  std::vector<double> q(x.begin(), x.begin() + static_cast<std::ptrdiff_t>(n));
  std::vector<double> drift(n);
  const double noise = sigma * std::sqrt(p_.dt);
  const std::size_t every = n_steps_ / p_.n_snap;
  Eigen::VectorXd y(static_cast<Eigen::Index>(output_dim()));
  Eigen::Index out = 0;
  for (std::size_t step = 1; step <= n_steps_; ++step) {
    for (std::size_t i = 0; i < n; ++i) {
      double coupling = 0.0;
      if (i > 0) coupling += q[i - 1] - q[i];
      if (i + 1 < n) coupling += q[i + 1] - q[i];
      drift[i] = p_.a * (q[i] - q[i] * q[i] * q[i]) + kappa * coupling;
    }
    for (std::size_t i = 0; i < n; ++i) q[i] += drift[i] * p_.dt + noise * std_normal(stream);
    if (step % every == 0)
      for (std::size_t i = 0; i < n; ++i) y[out++] = q[i];
  }
  return y;
}

double kramers_escape_fraction(double sigma, double q0, std::size_t n_runs, const RngStream& stream) {
  if (n_runs == 0) throw std::invalid_argument("kramers_escape_fraction: n_runs must be positive");
  DoubleWellParams params;
  params.n_particles = 1;
  params.n_snap = 1;
  const DoubleWellSystem system(params);
  const double x[3] = {q0, sigma, 0.0};
  std::size_t escaped = 0;
  for (std::size_t r = 0; r < n_runs; ++r) {
    RngStream run = stream.split(r);
    if (system.simulate(x, run)[0] > 0.0) ++escaped;
  }
  return static_cast<double>(escaped) / static_cast<double>(n_runs);
}

}  // namespace milb
