#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "milb/gmm.hpp"
#include "milb/rng.hpp"

namespace milb {

/// Architecture of a Mixture Density Network: `depth` GELU layers of width
/// `hidden`, then a linear head emitting, per component, one logit, a mean
/// vector and a raw variance vector.
struct MdnArch {
  std::size_t input_dim = 1;
  std::size_t output_dim = 1;
  std::size_t hidden = 128;
  std::size_t depth = 2;
  std::size_t n_components = 5;

  [[nodiscard]] std::size_t head_outputs() const { return n_components * (1 + 2 * output_dim); }
  [[nodiscard]] std::size_t param_count() const;
  [[nodiscard]] std::size_t layer_input(std::size_t layer) const { return layer == 0 ? input_dim : hidden; }
  bool operator==(const MdnArch&) const = default;
};

using RowMatrixMap = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
using ConstRowMatrixMap =
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

/// Contiguous parameter block inside the flat parameter vector.
struct ParamBlock {
  std::string name;
  std::size_t offset;
  std::size_t rows;
  std::size_t cols;  // 1 for bias vectors
  bool is_bias;
  [[nodiscard]] std::size_t size() const { return rows * cols; }
};

/// MDN parameters stored as one flat vector. Layer weights are (out x in)
/// row-major; the head rows are ordered [logits | means (k-major) | raw variances].
/// Gradients share the same type and layout.
class MdnParams {
 public:
  explicit MdnParams(const MdnArch& arch);

  [[nodiscard]] const MdnArch& arch() const { return arch_; }
  [[nodiscard]] Eigen::VectorXd& flat() { return flat_; }
  [[nodiscard]] const Eigen::VectorXd& flat() const { return flat_; }

  RowMatrixMap layer_weight(std::size_t layer);
  [[nodiscard]] ConstRowMatrixMap layer_weight(std::size_t layer) const;
  Eigen::Map<Eigen::VectorXd> layer_bias(std::size_t layer);
  [[nodiscard]] Eigen::Map<const Eigen::VectorXd> layer_bias(std::size_t layer) const;
  RowMatrixMap head_weight();
  [[nodiscard]] ConstRowMatrixMap head_weight() const;
  Eigen::Map<Eigen::VectorXd> head_bias();
  [[nodiscard]] Eigen::Map<const Eigen::VectorXd> head_bias() const;

  /// Blocks in storage order: layer0.weight, layer0.bias, ..., head.weight, head.bias.
  [[nodiscard]] std::vector<ParamBlock> blocks() const;

  /// Head row indices for component k.
  [[nodiscard]] std::size_t logit_row(std::size_t k) const { return k; }
  [[nodiscard]] std::size_t mean_row(std::size_t k, std::size_t d) const {
    return arch_.n_components + k * arch_.output_dim + d;
  }
  [[nodiscard]] std::size_t var_row(std::size_t k, std::size_t d) const {
    return arch_.n_components * (1 + arch_.output_dim) + k * arch_.output_dim + d;
  }

 private:
  [[nodiscard]] std::size_t layer_offset(std::size_t layer) const;
  [[nodiscard]] std::size_t head_offset() const { return layer_offset(arch_.depth); }

  MdnArch arch_;
  Eigen::VectorXd flat_;
};

/// LeCun-uniform weights U(-sqrt(3/fan_in), sqrt(3/fan_in)); zero biases.
MdnParams init_mdn(const MdnArch& arch, RngStream& stream);

/// Exact GELU x * Phi(x).
double gelu(double x);
double gelu_derivative(double x);
double softplus(double x);

/// Last backbone activation z(x) for every column of `inputs` (hidden x B).
Eigen::MatrixXd backbone_features(const MdnParams& params, const Eigen::MatrixXd& inputs);
/// Raw head outputs (head_outputs x B).
Eigen::MatrixXd head_outputs(const MdnParams& params, const Eigen::MatrixXd& inputs);

/// Converts one column of raw head outputs into a mixture: softmax weights,
/// raw means, softplus(raw) + kVarFloor variances.
DiagGaussianMixture head_to_mixture(const MdnArch& arch, std::span<const double> head);

DiagGaussianMixture forward(const MdnParams& params, std::span<const double> x);
DiagGaussianMixture forward(const MdnParams& params, const Eigen::VectorXd& x);
std::vector<DiagGaussianMixture> forward_batch(const MdnParams& params, const Eigen::MatrixXd& inputs);

/// Mean negative log-likelihood over the batch columns.
double nll_loss(const MdnParams& params, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets);

struct LossAndGradient {
  double loss;
  MdnParams gradient;
};

/// Loss and its exact gradient by reverse-mode differentiation.
LossAndGradient grad_nll(const MdnParams& params, const Eigen::MatrixXd& inputs,
                         const Eigen::MatrixXd& targets);

}  // namespace milb
