#include <cmath>
#include <stdexcept>

#include "milb/benchmarks.hpp"

namespace milb {

namespace {

Eigen::Vector3d normal3(RngStream& s, double mean, double sd) {
  return {normal(s, mean, sd), normal(s, mean, sd), normal(s, mean, sd)};
}

Eigen::Vector3d composition(std::span<const double> x) { return {x[0], x[1], 1.0 - x[0] - x[1]}; }

}  // namespace

TernarySystem::TernarySystem(const TernaryParams& params) : p_(params) {
  if (p_.n_phases == 0 || !(p_.tau > 0.0)) throw std::invalid_argument("TernarySystem: invalid parameters");
  RngStream s(p_.system_seed);
  for (std::size_t phase = 0; phase < p_.n_phases; ++phase) {
    Eigen::Matrix3d r;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) r(i, j) = normal(s, 0.0, p_.hessian_scale);
    h_.push_back(r * r.transpose() + p_.hessian_floor * Eigen::Matrix3d::Identity());
    b_.push_back(normal3(s, 0.0, p_.bias_scale));
    c_.push_back(normal3(s, 0.0, p_.c_scale));
    d_.push_back(normal(s, 0.0, p_.d_scale));
    omega_.push_back(normal3(s, 0.0, p_.omega_scale));
    Eigen::VectorXd w(static_cast<Eigen::Index>(p_.n_proc));
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = normal(s, 0.0, p_.w_scale);
    w_.push_back(std::move(w));
    e_.push_back(normal3(s, 0.0, p_.e_scale));
    f_.push_back(normal(s, p_.f_mean, p_.f_sd));
  }
}

double TernarySystem::free_energy(std::size_t phase, const Eigen::Vector3d& x3) const {
  return 0.5 * x3.dot(h_.at(phase) * x3) + b_.at(phase).dot(x3);
}

Eigen::VectorXd TernarySystem::phase_posterior(const Eigen::Vector3d& x3) const {
  Eigen::VectorXd logits(static_cast<Eigen::Index>(p_.n_phases));
  for (std::size_t phase = 0; phase < p_.n_phases; ++phase)
    logits[static_cast<Eigen::Index>(phase)] = -free_energy(phase, x3) / p_.tau;
  Eigen::VectorXd w = (logits.array() - logits.maxCoeff()).exp();
  return w / w.sum();
}

Eigen::VectorXd TernarySystem::sample_input(RngStream& stream) const {
  const double alpha[3] = {1.0, 1.0, 1.0};
  const auto comp = dirichlet(stream, alpha);
  Eigen::VectorXd x(static_cast<Eigen::Index>(input_dim()));
  x[0] = comp[0];
  x[1] = comp[1];
  for (Eigen::Index i = 2; i < x.size(); ++i) x[i] = uniform(stream, -1.0, 1.0);
  return x;
}

DiagGaussianMixture TernarySystem::oracle_mixture(std::span<const double> x) const {
  if (x.size() != input_dim()) throw DimensionError("TernarySystem: input dimension mismatch");
  const Eigen::Vector3d x3 = composition(x);
  const Eigen::Map<const Eigen::VectorXd> proc(x.data() + 2, static_cast<Eigen::Index>(p_.n_proc));
  const auto k = static_cast<Eigen::Index>(p_.n_phases);
  Eigen::MatrixXd means(k, 1);
  Eigen::MatrixXd vars(k, 1);
  for (Eigen::Index phase = 0; phase < k; ++phase) {
    const auto ph = static_cast<std::size_t>(phase);
    means(phase, 0) = c_[ph].dot(x3) + d_[ph] + 0.5 * std::sin(omega_[ph].dot(x3)) + w_[ph].dot(proc);
    vars(phase, 0) = std::max(std::exp(e_[ph].dot(x3) + f_[ph]), kVarFloor);
  }
  return DiagGaussianMixture(phase_posterior(x3), std::move(means), std::move(vars));
}

std::optional<DiagGaussianMixture> TernarySystem::oracle(std::span<const double> x) const {
  return oracle_mixture(x);
}

Eigen::VectorXd TernarySystem::simulate(std::span<const double> x, RngStream& stream) const {
  return sample(oracle_mixture(x), stream);
}

double TernarySystem::boundary_fraction(double threshold, std::size_t resolution) const {
  if (resolution == 0) throw std::invalid_argument("boundary_fraction: resolution must be positive");
  std::size_t total = 0;
  std::size_t boundary = 0;
  const double step = 1.0 / static_cast<double>(resolution);
  for (std::size_t i = 0; i <= resolution; ++i) {
    for (std::size_t j = 0; i + j <= resolution; ++j) {
      const Eigen::Vector3d x3(static_cast<double>(i) * step, static_cast<double>(j) * step,
                               static_cast<double>(resolution - i - j) * step);
      ++total;
      if (phase_posterior(x3).maxCoeff() < threshold) ++boundary;
    }
  }
  return static_cast<double>(boundary) / static_cast<double>(total);
}

}  // namespace milb
