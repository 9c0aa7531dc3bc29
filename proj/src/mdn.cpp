#include "milb/mdn.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace milb {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;
constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

void check_inputs(const MdnArch& arch, const Eigen::MatrixXd& inputs) {
  if (static_cast<std::size_t>(inputs.rows()) != arch.input_dim)
    throw DimensionError("MDN: input dimension mismatch (expected " + std::to_string(arch.input_dim) +
                         ", got " + std::to_string(inputs.rows()) + ")");
}

void check_batch(const MdnArch& arch, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) {
  check_inputs(arch, inputs);
  if (static_cast<std::size_t>(targets.rows()) != arch.output_dim)
    throw DimensionError("MDN: target dimension mismatch");
  if (inputs.cols() != targets.cols()) throw DimensionError("MDN: inputs and targets disagree on batch size");
  if (inputs.cols() == 0) throw std::invalid_argument("MDN: empty batch");
}

// Forward pass keeping what the backward pass needs.
struct ForwardTrace {
  std::vector<Eigen::MatrixXd> activations;      // activations[0] = inputs, [l+1] = gelu(pre[l])
  std::vector<Eigen::MatrixXd> pre_activations;  // one per backbone layer
  Eigen::MatrixXd head;                          // raw head outputs
};

ForwardTrace run_forward(const MdnParams& params, const Eigen::MatrixXd& inputs) {
  const auto& arch = params.arch();
  ForwardTrace t;
  t.activations.reserve(arch.depth + 1);
  t.pre_activations.reserve(arch.depth);
  t.activations.push_back(inputs);
  for (std::size_t l = 0; l < arch.depth; ++l) {
    Eigen::MatrixXd pre = params.layer_weight(l) * t.activations.back();
    pre.colwise() += params.layer_bias(l);
    t.activations.push_back(pre.unaryExpr([](double v) { return gelu(v); }));
    t.pre_activations.push_back(std::move(pre));
  }
  t.head = params.head_weight() * t.activations.back();
  t.head.colwise() += params.head_bias();
  return t;
}

// Per-sample negative log-likelihood; if `d_head` is non-null, writes the
// derivative of (scale * nll) with respect to the raw head column.
double sample_nll(const MdnArch& arch, const double* head, const double* y, double scale, double* d_head) {
  const std::size_t k_count = arch.n_components;
  const std::size_t n = arch.output_dim;
  const double* logits = head;
  const double* means = head + k_count;
  const double* raw_var = head + k_count * (1 + n);

  double logit_peak = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < k_count; ++k) logit_peak = std::max(logit_peak, logits[k]);
  double logit_acc = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) logit_acc += std::exp(logits[k] - logit_peak);
  const double logit_lse = logit_peak + std::log(logit_acc);

  // Small fixed-size scratch; K is tiny in practice.
  std::vector<double> joint(k_count);
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < k_count; ++k) {
    double acc = 0.0;
    for (std::size_t d = 0; d < n; ++d) {
      const double v = softplus(raw_var[k * n + d]) + kVarFloor;
      const double r = y[d] - means[k * n + d];
      acc += std::log(v) + r * r / v;
    }
    joint[k] = logits[k] - logit_lse - 0.5 * (static_cast<double>(n) * kLog2Pi + acc);
    peak = std::max(peak, joint[k]);
  }
  double acc = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) acc += std::exp(joint[k] - peak);
  const double log_p = peak + std::log(acc);

  if (d_head != nullptr) {
    double* d_logits = d_head;
    double* d_means = d_head + k_count;
    double* d_raw_var = d_head + k_count * (1 + n);
    for (std::size_t k = 0; k < k_count; ++k) {
      const double gamma = std::exp(joint[k] - log_p);
      const double alpha = std::exp(logits[k] - logit_lse);
      d_logits[k] = scale * (alpha - gamma);
      for (std::size_t d = 0; d < n; ++d) {
        const double raw = raw_var[k * n + d];
        const double v = softplus(raw) + kVarFloor;
        const double r = y[d] - means[k * n + d];
        d_means[k * n + d] = -scale * gamma * r / v;
        d_raw_var[k * n + d] = scale * 0.5 * gamma * (1.0 / v - r * r / (v * v)) * sigmoid(raw);
      }
    }
  }
  return -log_p;
}

}  // namespace

std::size_t MdnArch::param_count() const {
  std::size_t total = 0;
  for (std::size_t l = 0; l < depth; ++l) total += hidden * layer_input(l) + hidden;
  const std::size_t last = depth == 0 ? input_dim : hidden;
  total += head_outputs() * last + head_outputs();
  return total;
}

MdnParams::MdnParams(const MdnArch& arch) : arch_(arch) {
  if (arch.input_dim == 0 || arch.output_dim == 0 || arch.n_components == 0 || (arch.depth > 0 && arch.hidden == 0))
    throw std::invalid_argument("MdnArch: dimensions must be positive");
  flat_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(arch.param_count()));
}

std::size_t MdnParams::layer_offset(std::size_t layer) const {
  std::size_t offset = 0;
  for (std::size_t l = 0; l < layer; ++l) offset += arch_.hidden * arch_.layer_input(l) + arch_.hidden;
  return offset;
}

RowMatrixMap MdnParams::layer_weight(std::size_t layer) {
  return {flat_.data() + layer_offset(layer), static_cast<Eigen::Index>(arch_.hidden),
          static_cast<Eigen::Index>(arch_.layer_input(layer))};
}

ConstRowMatrixMap MdnParams::layer_weight(std::size_t layer) const {
  return {flat_.data() + layer_offset(layer), static_cast<Eigen::Index>(arch_.hidden),
          static_cast<Eigen::Index>(arch_.layer_input(layer))};
}

Eigen::Map<Eigen::VectorXd> MdnParams::layer_bias(std::size_t layer) {
  return {flat_.data() + layer_offset(layer) + arch_.hidden * arch_.layer_input(layer),
          static_cast<Eigen::Index>(arch_.hidden)};
}

Eigen::Map<const Eigen::VectorXd> MdnParams::layer_bias(std::size_t layer) const {
  return {flat_.data() + layer_offset(layer) + arch_.hidden * arch_.layer_input(layer),
          static_cast<Eigen::Index>(arch_.hidden)};
}

namespace {
std::size_t head_fan_in(const MdnArch& arch) { return arch.depth == 0 ? arch.input_dim : arch.hidden; }
}  // namespace

RowMatrixMap MdnParams::head_weight() {
  return {flat_.data() + head_offset(), static_cast<Eigen::Index>(arch_.head_outputs()),
          static_cast<Eigen::Index>(head_fan_in(arch_))};
}

ConstRowMatrixMap MdnParams::head_weight() const {
  return {flat_.data() + head_offset(), static_cast<Eigen::Index>(arch_.head_outputs()),
          static_cast<Eigen::Index>(head_fan_in(arch_))};
}

Eigen::Map<Eigen::VectorXd> MdnParams::head_bias() {
  return {flat_.data() + head_offset() + arch_.head_outputs() * head_fan_in(arch_),
          static_cast<Eigen::Index>(arch_.head_outputs())};
}

Eigen::Map<const Eigen::VectorXd> MdnParams::head_bias() const {
  return {flat_.data() + head_offset() + arch_.head_outputs() * head_fan_in(arch_),
          static_cast<Eigen::Index>(arch_.head_outputs())};
}

std::vector<ParamBlock> MdnParams::blocks() const {
  std::vector<ParamBlock> out;
  std::size_t offset = 0;
  for (std::size_t l = 0; l < arch_.depth; ++l) {
    const std::size_t fan_in = arch_.layer_input(l);
    out.push_back({"layer" + std::to_string(l) + ".weight", offset, arch_.hidden, fan_in, false});
    offset += arch_.hidden * fan_in;
    out.push_back({"layer" + std::to_string(l) + ".bias", offset, arch_.hidden, 1, true});
    offset += arch_.hidden;
  }
  const std::size_t fan_in = head_fan_in(arch_);
  out.push_back({"head.weight", offset, arch_.head_outputs(), fan_in, false});
  offset += arch_.head_outputs() * fan_in;
  out.push_back({"head.bias", offset, arch_.head_outputs(), 1, true});
  return out;
}

MdnParams init_mdn(const MdnArch& arch, RngStream& stream) {
  MdnParams params(arch);
  for (const auto& block : params.blocks()) {
    if (block.is_bias) continue;
    const double limit = std::sqrt(3.0 / static_cast<double>(block.cols));
    double* data = params.flat().data() + block.offset;
    for (std::size_t i = 0; i < block.size(); ++i) data[i] = uniform(stream, -limit, limit);
  }
  return params;
}

double gelu(double x) { return 0.5 * x * (1.0 + std::erf(x * kInvSqrt2)); }

double gelu_derivative(double x) {
  return 0.5 * (1.0 + std::erf(x * kInvSqrt2)) + x * kInvSqrt2Pi * std::exp(-0.5 * x * x);
}

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

Eigen::MatrixXd backbone_features(const MdnParams& params, const Eigen::MatrixXd& inputs) {
  check_inputs(params.arch(), inputs);
  Eigen::MatrixXd a = inputs;
  for (std::size_t l = 0; l < params.arch().depth; ++l) {
    Eigen::MatrixXd pre = params.layer_weight(l) * a;
    pre.colwise() += params.layer_bias(l);
    a = pre.unaryExpr([](double v) { return gelu(v); });
  }
  return a;
}

Eigen::MatrixXd head_outputs(const MdnParams& params, const Eigen::MatrixXd& inputs) {
  Eigen::MatrixXd z = backbone_features(params, inputs);
  Eigen::MatrixXd head = params.head_weight() * z;
  head.colwise() += params.head_bias();
  return head;
}

DiagGaussianMixture head_to_mixture(const MdnArch& arch, std::span<const double> head) {
  if (head.size() != arch.head_outputs()) throw DimensionError("head_to_mixture: head size mismatch");
  const auto k_count = static_cast<Eigen::Index>(arch.n_components);
  const auto n = static_cast<Eigen::Index>(arch.output_dim);
  Eigen::VectorXd weights(k_count);
  double peak = -std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < k_count; ++k) peak = std::max(peak, head[static_cast<std::size_t>(k)]);
  double total = 0.0;
  for (Eigen::Index k = 0; k < k_count; ++k) {
    weights[k] = std::exp(head[static_cast<std::size_t>(k)] - peak);
    total += weights[k];
  }
  weights /= total;
  Eigen::MatrixXd means(k_count, n);
  Eigen::MatrixXd vars(k_count, n);
  const double* mean_ptr = head.data() + k_count;
  const double* var_ptr = head.data() + k_count * (1 + n);
  for (Eigen::Index k = 0; k < k_count; ++k) {
    for (Eigen::Index d = 0; d < n; ++d) {
      means(k, d) = mean_ptr[k * n + d];
      vars(k, d) = softplus(var_ptr[k * n + d]) + kVarFloor;
    }
  }
  return DiagGaussianMixture(std::move(weights), std::move(means), std::move(vars));
}

DiagGaussianMixture forward(const MdnParams& params, std::span<const double> x) {
  if (x.size() != params.arch().input_dim) throw DimensionError("forward: input dimension mismatch");
  const Eigen::MatrixXd input =
      Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  const Eigen::MatrixXd head = head_outputs(params, input);
  return head_to_mixture(params.arch(), std::span<const double>(head.data(), static_cast<std::size_t>(head.rows())));
}

DiagGaussianMixture forward(const MdnParams& params, const Eigen::VectorXd& x) {
  return forward(params, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

std::vector<DiagGaussianMixture> forward_batch(const MdnParams& params, const Eigen::MatrixXd& inputs) {
  const Eigen::MatrixXd head = head_outputs(params, inputs);
  std::vector<DiagGaussianMixture> out;
  out.reserve(static_cast<std::size_t>(head.cols()));
  for (Eigen::Index s = 0; s < head.cols(); ++s)
    out.push_back(head_to_mixture(params.arch(),
                                  std::span<const double>(head.col(s).data(), static_cast<std::size_t>(head.rows()))));
  return out;
}

double nll_loss(const MdnParams& params, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) {
  check_batch(params.arch(), inputs, targets);
  const Eigen::MatrixXd head = head_outputs(params, inputs);
  double total = 0.0;
  for (Eigen::Index s = 0; s < head.cols(); ++s)
    total += sample_nll(params.arch(), head.col(s).data(), targets.col(s).data(), 0.0, nullptr);
  return total / static_cast<double>(head.cols());
}

LossAndGradient grad_nll(const MdnParams& params, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets) {
  const auto& arch = params.arch();
  check_batch(arch, inputs, targets);
  ForwardTrace trace = run_forward(params, inputs);
  const Eigen::Index batch = inputs.cols();
  const double scale = 1.0 / static_cast<double>(batch);

  Eigen::MatrixXd d_head(trace.head.rows(), batch);
  double total = 0.0;
  for (Eigen::Index s = 0; s < batch; ++s)
    total += sample_nll(arch, trace.head.col(s).data(), targets.col(s).data(), scale, d_head.col(s).data());

  LossAndGradient out{total * scale, MdnParams(arch)};
  auto& grad = out.gradient;
  const Eigen::MatrixXd& z = trace.activations.back();
  grad.head_weight().noalias() = d_head * z.transpose();
  grad.head_bias() = d_head.rowwise().sum();
  Eigen::MatrixXd d_act = params.head_weight().transpose() * d_head;

  for (std::size_t l = arch.depth; l-- > 0;) {
    Eigen::MatrixXd d_pre = d_act.cwiseProduct(trace.pre_activations[l].unaryExpr([](double v) { return gelu_derivative(v); }));
    grad.layer_weight(l).noalias() = d_pre * trace.activations[l].transpose();
    grad.layer_bias(l) = d_pre.rowwise().sum();
    if (l > 0) d_act.noalias() = params.layer_weight(l).transpose() * d_pre;
  }
  return out;
}

}  // namespace milb
