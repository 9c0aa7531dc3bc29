#include <cmath>
#include <numbers>
#include <stdexcept>

#include "milb/benchmarks.hpp"

namespace milb {

namespace {

Eigen::MatrixXd normal_matrix(RngStream& s, Eigen::Index rows, Eigen::Index cols, double sd) {
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(s, 0.0, sd);
  return m;
}

Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  Eigen::VectorXd w = (logits.array() - logits.maxCoeff()).exp();
  return w / w.sum();
}

}  // namespace

MultimodalSystem::MultimodalSystem(const MultimodalParams& params) : p_(params) {
  if (p_.input_dim == 0 || p_.output_dim == 0 || p_.latent_dim == 0 || p_.latent_dim > p_.input_dim ||
      p_.n_components < 2 || p_.n_features == 0)
    throw std::invalid_argument("MultimodalSystem: invalid dimensions");
  const auto d = static_cast<Eigen::Index>(p_.input_dim);
  const auto m = static_cast<Eigen::Index>(p_.output_dim);
  const auto l = static_cast<Eigen::Index>(p_.latent_dim);
  const auto p = static_cast<Eigen::Index>(p_.n_features);

  RngStream manifold(p_.manifold_seed);
  a_ = normal_matrix(manifold, d, l, 1.0 / std::sqrt(static_cast<double>(l)));
  b_m_ = normal_matrix(manifold, d, 1, 1.0);

  RngStream dist(p_.dist_seed);
  omega_ = normal_matrix(dist, p, d, 1.0 / std::sqrt(static_cast<double>(d)));
  phi_.resize(p);
  for (Eigen::Index i = 0; i < p; ++i) phi_[i] = uniform(dist, 0.0, 2.0 * std::numbers::pi);
  const double feature_sd = 1.0 / std::sqrt(static_cast<double>(p));
  for (std::size_t k = 0; k < p_.n_components; ++k) {
    b_.push_back(normal_matrix(dist, m, p, feature_sd));
    c_.push_back(normal_matrix(dist, m, 1, p_.c_scale));
    cv_.push_back(normal_matrix(dist, m, p, feature_sd));
  }
  v_ = normal_matrix(dist, static_cast<Eigen::Index>(p_.n_components - 1), l, 1.0);
  v_.rowwise().normalize();
}

Eigen::VectorXd MultimodalSystem::embed(const Eigen::VectorXd& latent) const {
  if (latent.size() != a_.cols()) throw DimensionError("MultimodalSystem::embed: latent dimension mismatch");
  return (a_ * latent + b_m_).array().tanh();
}

Eigen::VectorXd MultimodalSystem::sample_input(RngStream& stream) const {
  Eigen::VectorXd latent(a_.cols());
  for (Eigen::Index i = 0; i < latent.size(); ++i) latent[i] = std_normal(stream);
  return embed(latent);
}

Eigen::VectorXd MultimodalSystem::mixing_weights(std::span<const double> x) const {
  if (x.size() != p_.input_dim) throw DimensionError("MultimodalSystem: input dimension mismatch");
  const auto l = static_cast<Eigen::Index>(p_.latent_dim);
  const Eigen::Map<const Eigen::VectorXd> head(x.data(), l);
  const double r = head.norm();
  const double gate = 0.5 * (1.0 + std::tanh(p_.beta * (r - p_.r0)));
  const Eigen::VectorXd angular = softmax(p_.gamma * (v_ * head));
  Eigen::VectorXd logits(static_cast<Eigen::Index>(p_.n_components));
  logits[0] = p_.scale * (1.0 - gate);
  logits.tail(logits.size() - 1) = p_.scale * gate * angular;
  return softmax(logits);
}

DiagGaussianMixture MultimodalSystem::oracle_mixture(std::span<const double> x) const {
  const Eigen::VectorXd weights = mixing_weights(x);
  const Eigen::Map<const Eigen::VectorXd> xv(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::VectorXd h = (omega_ * xv + phi_).array().cos();
  const auto k_count = static_cast<Eigen::Index>(p_.n_components);
  const auto m = static_cast<Eigen::Index>(p_.output_dim);
  Eigen::MatrixXd means(k_count, m);
  Eigen::MatrixXd vars(k_count, m);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    const auto kk = static_cast<std::size_t>(k);
    means.row(k) = (b_[kk] * h + c_[kk]).transpose();
    vars.row(k) = (cv_[kk] * h).array().exp().max(kVarFloor).transpose();
  }
  const Eigen::RowVectorXd centre = weights.transpose() * means;
  means.rowwise() -= centre;
  return DiagGaussianMixture(weights, std::move(means), std::move(vars));
}

std::optional<DiagGaussianMixture> MultimodalSystem::oracle(std::span<const double> x) const {
  return oracle_mixture(x);
}

Eigen::VectorXd MultimodalSystem::simulate(std::span<const double> x, RngStream& stream) const {
  return sample(oracle_mixture(x), stream);
}

}  // namespace milb
