#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "milb/gmm.hpp"
#include "milb/rng.hpp"

namespace milb {

/// Data-generating process: input prior, labeling oracle and (when known)
/// the exact conditional density.
class Simulator {
 public:
  virtual ~Simulator() = default;
  [[nodiscard]] virtual std::string name() const = 0;
  [[nodiscard]] virtual std::size_t input_dim() const = 0;
  [[nodiscard]] virtual std::size_t output_dim() const = 0;
  virtual Eigen::VectorXd sample_input(RngStream& stream) const = 0;
  /// One label y ~ p*(.|x).
  virtual Eigen::VectorXd simulate(std::span<const double> x, RngStream& stream) const = 0;
  /// Exact conditional density, if available.
  [[nodiscard]] virtual std::optional<DiagGaussianMixture> oracle(std::span<const double> x) const {
    return std::nullopt;
  }
};

struct MultimodalParams {
  std::size_t input_dim = 10;   // D
  std::size_t output_dim = 16;  // M
  std::size_t latent_dim = 4;   // L
  std::size_t n_components = 3; // K
  std::size_t n_features = 128; // P
  double c_scale = 10.0;
  double beta = 8.0;
  double r0 = 1.3;
  double gamma = 2.0;
  double scale = 3.0;
  std::uint64_t dist_seed = 42;
  std::uint64_t manifold_seed = 1;
};

/// Manifold inputs x = tanh(A l + b_m), random-Fourier-feature component
/// means and log-variances, radial/angular gated weights, centred means.
class MultimodalSystem final : public Simulator {
 public:
  explicit MultimodalSystem(const MultimodalParams& params = {});

  [[nodiscard]] std::string name() const override { return "multimodal"; }
  [[nodiscard]] std::size_t input_dim() const override { return p_.input_dim; }
  [[nodiscard]] std::size_t output_dim() const override { return p_.output_dim; }
  Eigen::VectorXd sample_input(RngStream& stream) const override;
  Eigen::VectorXd simulate(std::span<const double> x, RngStream& stream) const override;
  [[nodiscard]] std::optional<DiagGaussianMixture> oracle(std::span<const double> x) const override;

  /// x for a given latent code l.
  [[nodiscard]] Eigen::VectorXd embed(const Eigen::VectorXd& latent) const;
  [[nodiscard]] DiagGaussianMixture oracle_mixture(std::span<const double> x) const;
  /// Softmax of the gate logits at x.
  [[nodiscard]] Eigen::VectorXd mixing_weights(std::span<const double> x) const;
  [[nodiscard]] const MultimodalParams& params() const { return p_; }

 private:
  MultimodalParams p_;
  Eigen::MatrixXd a_;      // D x L
  Eigen::VectorXd b_m_;    // D
  Eigen::MatrixXd omega_;  // P x D
  Eigen::VectorXd phi_;    // P
  std::vector<Eigen::MatrixXd> b_;  // K of M x P
  std::vector<Eigen::VectorXd> c_;  // K of M
  std::vector<Eigen::MatrixXd> cv_; // K of M x P (log-variance maps)
  Eigen::MatrixXd v_;      // (K-1) x L, unit rows
};

struct DoubleWellParams {
  std::size_t n_particles = 5;
  double a = 1.0;
  double dt = 0.005;
  double t_final = 5.0;
  std::size_t n_snap = 4;
  double q0_lo = -1.5, q0_hi = 1.5;
  double sigma_lo = 0.3, sigma_hi = 2.0;
  double kappa_lo = 0.0, kappa_hi = 3.0;
};

/// Overdamped Langevin chain in a quartic double well with open-boundary
/// nearest-neighbour coupling, integrated by Euler-Maruyama.
/// Input x = (q(0), sigma, kappa); output = positions at n_snap evenly spaced
/// snapshot steps, snapshot-major.
class DoubleWellSystem final : public Simulator {
 public:
  explicit DoubleWellSystem(const DoubleWellParams& params = {});

  [[nodiscard]] std::string name() const override { return "double_well"; }
  [[nodiscard]] std::size_t input_dim() const override { return p_.n_particles + 2; }
  [[nodiscard]] std::size_t output_dim() const override { return p_.n_particles * p_.n_snap; }
  Eigen::VectorXd sample_input(RngStream& stream) const override;
  Eigen::VectorXd simulate(std::span<const double> x, RngStream& stream) const override;

  [[nodiscard]] std::size_t n_steps() const { return n_steps_; }
  /// Step indices (1-based count of completed steps) at which snapshots are taken.
  [[nodiscard]] std::vector<std::size_t> snapshot_steps() const;
  /// Per-particle potential a (q^4/4 - q^2/2).
  [[nodiscard]] double potential(double q) const;
  [[nodiscard]] const DoubleWellParams& params() const { return p_; }

 private:
  DoubleWellParams p_;
  std::size_t n_steps_;
};

/// Fraction of single-particle (kappa = 0) trajectories started at q0 whose
/// final position is positive.
double kramers_escape_fraction(double sigma, double q0, std::size_t n_runs, const RngStream& stream);

struct TernaryParams {
  std::size_t n_phases = 4;
  std::size_t n_proc = 6;
  double tau = 0.08;
  double hessian_scale = 0.5;
  double hessian_floor = 0.3;
  double bias_scale = 2.0;
  double c_scale = 6.0;
  double d_scale = 2.0;
  double omega_scale = 2.0;
  double w_scale = 1.0;
  double e_scale = 0.5;
  double f_mean = -1.0;
  double f_sd = 0.3;
  std::uint64_t system_seed = 12;
};

/// Softmin over quadratic free energies of composition; scalar response.
/// Input x = (x_A, x_B, p_1..p_n_proc) with x_C = 1 - x_A - x_B.
class TernarySystem final : public Simulator {
 public:
  explicit TernarySystem(const TernaryParams& params = {});

  [[nodiscard]] std::string name() const override { return "ternary"; }
  [[nodiscard]] std::size_t input_dim() const override { return 2 + p_.n_proc; }
  [[nodiscard]] std::size_t output_dim() const override { return 1; }
  Eigen::VectorXd sample_input(RngStream& stream) const override;
  Eigen::VectorXd simulate(std::span<const double> x, RngStream& stream) const override;
  [[nodiscard]] std::optional<DiagGaussianMixture> oracle(std::span<const double> x) const override;

  [[nodiscard]] DiagGaussianMixture oracle_mixture(std::span<const double> x) const;
  /// Phase posterior at composition (x_A, x_B, x_C).
  [[nodiscard]] Eigen::VectorXd phase_posterior(const Eigen::Vector3d& x3) const;
  [[nodiscard]] double free_energy(std::size_t phase, const Eigen::Vector3d& x3) const;
  /// Fraction of the uniform simplex grid with `resolution` steps per edge
  /// whose maximum phase posterior is below `threshold`.
  [[nodiscard]] double boundary_fraction(double threshold, std::size_t resolution = 200) const;
  [[nodiscard]] const TernaryParams& params() const { return p_; }

 private:
  TernaryParams p_;
  std::vector<Eigen::Matrix3d> h_;
  std::vector<Eigen::Vector3d> b_, c_, omega_, e_;
  std::vector<double> d_, f_;
  std::vector<Eigen::VectorXd> w_;
};

/// Builds a simulator by id: multimodal | double_well | ternary.
std::shared_ptr<const Simulator> make_simulator(const std::string& id);

/// Mean of -log p*(y|x) over columns; throws if the oracle is unavailable.
double oracle_nll(const Simulator& sim, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets);

/// Pool, test set and labeled subset. Pool labels are produced lazily by
/// `label`, each index from its own stream label_stream.split(index).
class LabeledPool {
 public:
  LabeledPool(std::shared_ptr<const Simulator> sim, Eigen::MatrixXd pool_inputs, Eigen::MatrixXd test_inputs,
              Eigen::MatrixXd test_targets, RngStream label_stream);

  [[nodiscard]] const Simulator& simulator() const { return *sim_; }
  [[nodiscard]] std::size_t pool_size() const { return static_cast<std::size_t>(pool_inputs_.cols()); }
  [[nodiscard]] const Eigen::MatrixXd& pool_inputs() const { return pool_inputs_; }
  [[nodiscard]] const Eigen::MatrixXd& test_inputs() const { return test_inputs_; }
  [[nodiscard]] const Eigen::MatrixXd& test_targets() const { return test_targets_; }
  [[nodiscard]] const std::vector<std::size_t>& labeled() const { return labeled_; }
  [[nodiscard]] bool is_labeled(std::size_t index) const { return mask_.at(index) != 0; }
  /// Unlabeled indices in ascending order.
  [[nodiscard]] std::vector<std::size_t> unlabeled() const;

  /// Queries the simulator for each index; throws on already-labeled or out-of-range indices.
  void label(std::span<const std::size_t> indices);
  /// Labeled inputs and targets in labeling order.
  [[nodiscard]] Eigen::MatrixXd labeled_inputs() const;
  [[nodiscard]] Eigen::MatrixXd labeled_targets() const;

 private:
  std::shared_ptr<const Simulator> sim_;
  Eigen::MatrixXd pool_inputs_;
  Eigen::MatrixXd test_inputs_;
  Eigen::MatrixXd test_targets_;
  RngStream label_stream_;
  std::vector<std::size_t> labeled_;
  std::vector<char> mask_;
  std::vector<Eigen::VectorXd> labels_;
};

/// Pool inputs from master.split(1), test set from master.split(2), labels
/// from master.split(3); the first init_size pool indices start labeled.
LabeledPool make_pool(std::shared_ptr<const Simulator> sim, std::size_t pool_size, std::size_t test_size,
                      std::size_t init_size, const RngStream& master);

/// n inputs and their labels: inputs from stream.split(0) in order, label i from stream.split(1).split(i).
std::pair<Eigen::MatrixXd, Eigen::MatrixXd> sample_dataset(const Simulator& sim, std::size_t n,
                                                           const RngStream& stream);

}  // namespace milb
