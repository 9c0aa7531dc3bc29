#include "milb/train.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "milb/parallel.hpp"

namespace milb {

namespace {

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;
constexpr double kAgcWeightEps = 1e-3;
constexpr double kAgcGradFloor = 1e-6;

// Scales `g` so that |g| <= clip * max(|w|, eps).
void clip_unit(const double* w, double* g, std::size_t n, double clip) {
  double w_sq = 0.0;
  double g_sq = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    w_sq += w[i] * w[i];
    g_sq += g[i] * g[i];
  }
  const double max_norm = clip * std::max(std::sqrt(w_sq), kAgcWeightEps);
  const double g_norm = std::sqrt(g_sq);
  if (g_norm <= max_norm) return;
  const double factor = max_norm / std::max(g_norm, kAgcGradFloor);
  for (std::size_t i = 0; i < n; ++i) g[i] *= factor;
}

}  // namespace

void TrainConfig::validate() const {
  if (!(peak_lr > 0.0) || !(weight_decay >= 0.0) || !(decay_rate > 0.0) || !(clip_threshold > 0.0))
    throw std::invalid_argument("TrainConfig: rates must be positive");
  if (decay_steps == 0 || batch_size == 0 || iter_cap == 0 || iter_per_sample == 0)
    throw std::invalid_argument("TrainConfig: step counts and batch size must be positive");
  if (min_iter > iter_cap) throw std::invalid_argument("TrainConfig: min_iter exceeds iter_cap");
}

std::size_t TrainConfig::n_iter(std::size_t n_lab) const {
  return std::clamp(iter_per_sample * n_lab, min_iter, iter_cap);
}

std::size_t TrainConfig::warmup_steps(std::size_t n_iter) const { return std::min(warmup_cap, n_iter / 5); }

double learning_rate(const TrainConfig& cfg, std::size_t step, std::size_t n_iter) {
  const std::size_t warmup = cfg.warmup_steps(n_iter);
  if (step <= warmup) {
    return warmup == 0 ? cfg.peak_lr : cfg.peak_lr * static_cast<double>(step) / static_cast<double>(warmup);
  }
  const double decayed = static_cast<double>(step - warmup) / static_cast<double>(cfg.decay_steps);
  return cfg.peak_lr * std::pow(cfg.decay_rate, decayed);
}

AdamWState::AdamWState(std::size_t n_params, std::size_t n_iter_)
    : m(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_params))),
      v(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n_params))),
      n_iter(n_iter_) {}

void clip_gradient(const MdnParams& params, MdnParams& grad, double clip) {
  if (!(params.arch() == grad.arch())) throw DimensionError("clip_gradient: architecture mismatch");
  const double* w = params.flat().data();
  double* g = grad.flat().data();
  for (const auto& block : params.blocks()) {
    if (block.is_bias) {
      for (std::size_t i = 0; i < block.size(); ++i) clip_unit(w + block.offset + i, g + block.offset + i, 1, clip);
    } else {
      for (std::size_t r = 0; r < block.rows; ++r) {
        const std::size_t off = block.offset + r * block.cols;
        clip_unit(w + off, g + off, block.cols, clip);
      }
    }
  }
}

void adamw_step(MdnParams& params, MdnParams& grad, AdamWState& state, const TrainConfig& cfg) {
  clip_gradient(params, grad, cfg.clip_threshold);
  state.step += 1;
  const double lr = learning_rate(cfg, state.step, state.n_iter);
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(kBeta1, t);
  const double bias2 = 1.0 - std::pow(kBeta2, t);
  auto& p = params.flat();
  const auto& g = grad.flat();
  bool finite = true;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    state.m[i] = kBeta1 * state.m[i] + (1.0 - kBeta1) * g[i];
    state.v[i] = kBeta2 * state.v[i] + (1.0 - kBeta2) * g[i] * g[i];
    const double m_hat = state.m[i] / bias1;
    const double v_hat = state.v[i] / bias2;
    p[i] -= lr * (m_hat / (std::sqrt(v_hat) + kAdamEps) + cfg.weight_decay * p[i]);
    finite = finite && std::isfinite(p[i]);
  }
  if (!finite) throw TrainingError("adamw_step: non-finite parameter after step " + std::to_string(state.step));
}

MdnParams train_member(const Dataset& data, const MdnArch& arch, const TrainConfig& cfg, const RngStream& stream,
                       std::vector<double>* loss_trace) {
  cfg.validate();
  const std::size_t n = data.size();
  if (n == 0) throw std::invalid_argument("train_member: empty dataset");
  if (static_cast<std::size_t>(data.targets.cols()) != n)
    throw DimensionError("train_member: inputs and targets disagree on size");

  RngStream init_stream = stream.split(0);
  RngStream batch_stream = stream.split(1);
  MdnParams params = init_mdn(arch, init_stream);
  const std::size_t n_iter = cfg.n_iter(n);
  AdamWState state(arch.param_count(), n_iter);
  if (loss_trace != nullptr) loss_trace->reserve(loss_trace->size() + n_iter);

  const bool full_batch = n <= cfg.batch_size;
  Eigen::MatrixXd xb(data.inputs.rows(), static_cast<Eigen::Index>(full_batch ? n : cfg.batch_size));
  Eigen::MatrixXd yb(data.targets.rows(), xb.cols());
  for (std::size_t step = 0; step < n_iter; ++step) {
    LossAndGradient lg = [&] {
      if (full_batch) return grad_nll(params, data.inputs, data.targets);
      for (Eigen::Index c = 0; c < xb.cols(); ++c) {
        const auto idx = static_cast<Eigen::Index>(batch_stream.next_u64() % n);
        xb.col(c) = data.inputs.col(idx);
        yb.col(c) = data.targets.col(idx);
      }
      return grad_nll(params, xb, yb);
    }();
    if (!std::isfinite(lg.loss))
      throw TrainingError("train_member: non-finite loss at step " + std::to_string(step));
    if (loss_trace != nullptr) loss_trace->push_back(lg.loss);
    adamw_step(params, lg.gradient, state, cfg);
  }
  return params;
}

MdnEnsemble train_ensemble(const Dataset& data, const MdnArch& arch, const TrainConfig& cfg, std::size_t n_ens,
                           const RngStream& master) {
  if (n_ens == 0) throw std::invalid_argument("train_ensemble: n_ens must be positive");
  std::vector<MdnParams> members(n_ens, MdnParams(arch));
  parallel_for(n_ens, [&](std::size_t z) { members[z] = train_member(data, arch, cfg, master.split(z)); });
  MdnEnsemble ens{std::move(members), std::vector<double>(n_ens, 1.0 / static_cast<double>(n_ens))};
  return ens;
}

EnsemblePrediction predict_ensemble(const MdnEnsemble& ens, std::span<const double> x) {
  std::vector<DiagGaussianMixture> mixtures;
  mixtures.reserve(ens.size());
  for (const auto& member : ens.members) mixtures.push_back(forward(member, x));
  return EnsemblePrediction(std::move(mixtures), ens.member_weights);
}

EnsemblePrediction predict_ensemble(const MdnEnsemble& ens, const Eigen::VectorXd& x) {
  return predict_ensemble(ens, std::span<const double>(x.data(), static_cast<std::size_t>(x.size())));
}

std::vector<EnsemblePrediction> predict_ensemble_batch(const MdnEnsemble& ens, const Eigen::MatrixXd& inputs) {
  const auto n = static_cast<std::size_t>(inputs.cols());
  std::vector<std::vector<DiagGaussianMixture>> per_sample(n);
  for (auto& v : per_sample) v.reserve(ens.size());
  for (const auto& member : ens.members) {
    auto mixtures = forward_batch(member, inputs);
    for (std::size_t s = 0; s < n; ++s) per_sample[s].push_back(std::move(mixtures[s]));
  }
  std::vector<EnsemblePrediction> out;
  out.reserve(n);
  for (auto& mixtures : per_sample) out.emplace_back(std::move(mixtures), ens.member_weights);
  return out;
}

}  // namespace milb
