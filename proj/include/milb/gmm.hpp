#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "milb/rng.hpp"

namespace milb {

/// Lower bound enforced on every diagonal variance entry.
inline constexpr double kVarFloor = 1e-6;
/// Tolerance on |sum(weights) - 1| accepted by the mixture constructors.
inline constexpr double kWeightTolerance = 1e-9;

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Gaussian mixture with diagonal covariances.
///
/// Component i has weight `weights()[i]`, mean `means().row(i)` and
/// diagonal variances `variances().row(i)`. Construction validates the
/// invariants (simplex weights within 1e-9, variances >= kVarFloor) and
/// throws instead of repairing.
class DiagGaussianMixture {
 public:
  DiagGaussianMixture(Eigen::VectorXd weights, Eigen::MatrixXd means, Eigen::MatrixXd variances);

  /// Single Gaussian component.
  static DiagGaussianMixture gaussian(const Eigen::VectorXd& mean, const Eigen::VectorXd& variances);

  [[nodiscard]] std::size_t n_components() const { return static_cast<std::size_t>(weights_.size()); }
  [[nodiscard]] std::size_t dim() const { return static_cast<std::size_t>(means_.cols()); }
  [[nodiscard]] const Eigen::VectorXd& weights() const { return weights_; }
  [[nodiscard]] const Eigen::MatrixXd& means() const { return means_; }
  [[nodiscard]] const Eigen::MatrixXd& variances() const { return variances_; }

  /// Mixture mean sum_i w_i mu_i.
  [[nodiscard]] Eigen::VectorXd mean() const;

 private:
  Eigen::VectorXd weights_;
  Eigen::MatrixXd means_;
  Eigen::MatrixXd variances_;
};

/// Predictive distribution of an ensemble: one mixture per member plus the
/// member weights w_z.
struct EnsemblePrediction {
  EnsemblePrediction(std::vector<DiagGaussianMixture> members, std::vector<double> weights);
  /// Uniform member weights 1/n.
  explicit EnsemblePrediction(std::vector<DiagGaussianMixture> members);

  std::vector<DiagGaussianMixture> member_mixtures;
  std::vector<double> member_weights;

  [[nodiscard]] std::size_t n_members() const { return member_mixtures.size(); }
  [[nodiscard]] std::size_t dim() const { return member_mixtures.front().dim(); }

  /// Re-checks the invariants; throws DimensionError / std::domain_error.
  void validate() const;
};

/// log sum_i w_i N(y; mu_i, diag(var_i)), max-shifted.
double log_pdf(const DiagGaussianMixture& m, std::span<const double> y);
double log_pdf(const DiagGaussianMixture& m, const Eigen::VectorXd& y);

/// Posterior component responsibilities at y; sums to one.
Eigen::VectorXd responsibilities(const DiagGaussianMixture& m, std::span<const double> y);

/// Draws a component from the weights, then a Gaussian sample.
Eigen::VectorXd sample(const DiagGaussianMixture& m, RngStream& stream);
/// Index of the component used by the next `sample` call on the same stream
/// position; exposed so tests can check component frequencies.
std::size_t sample_component(const DiagGaussianMixture& m, RngStream& stream);

/// Flattens an ensemble into one mixture with weights w_z * alpha_i^(z).
DiagGaussianMixture marginal_mixture(const EnsemblePrediction& e);

/// Entropy of N(mean, diag(variances)): 0.5 * sum_d log(2 pi e var_d).
double entropy_exact_gaussian(std::span<const double> variances);
double entropy_exact_gaussian(const Eigen::VectorXd& variances);

/// Pairwise-overlap lower bound on mixture entropy:
///   -sum_i w_i log sum_j w_j N(mu_i; mu_j, C_i + C_j).
double entropy_lower(const DiagGaussianMixture& m);

/// Upper bound sum_i w_i (-log w_i + 0.5 log((2 pi e)^N |C_i|)).
double entropy_upper(const DiagGaussianMixture& m);

struct MonteCarloEstimate {
  double estimate;
  double stderr_;
};

/// -mean log p(Y_s) over n_samples draws Y_s ~ m.
MonteCarloEstimate entropy_mc(const DiagGaussianMixture& m, std::size_t n_samples, RngStream& stream);

}  // namespace milb
