#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "milb/gmm.hpp"
#include "milb/mdn.hpp"
#include "milb/rng.hpp"

namespace milb {

/// Raised when the training loss or parameters become non-finite.
struct TrainingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double peak_lr = 5e-4;
  double weight_decay = 1e-2;
  std::size_t warmup_cap = 500;  // warmup = min(warmup_cap, n_iter / 5)
  double decay_rate = 0.9;
  std::size_t decay_steps = 2000;
  double clip_threshold = 0.1;
  std::size_t batch_size = 128;
  std::size_t iter_cap = 10000;
  std::size_t iter_per_sample = 10;
  std::size_t min_iter = 0;

  /// Throws std::invalid_argument on nonpositive rates or sizes.
  void validate() const;
  /// clamp(iter_per_sample * n_lab, min_iter, iter_cap).
  [[nodiscard]] std::size_t n_iter(std::size_t n_lab) const;
  [[nodiscard]] std::size_t warmup_steps(std::size_t n_iter) const;
};

/// Learning rate of the t-th update (t = 1 is the first step). Linear warmup
/// peak * t / warmup, then peak * decay_rate^((t - warmup) / decay_steps).
double learning_rate(const TrainConfig& cfg, std::size_t step, std::size_t n_iter);

struct AdamWState {
  AdamWState(std::size_t n_params, std::size_t n_iter);
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::size_t step = 0;  // updates applied so far
  std::size_t n_iter;
};

/// Unit-wise adaptive gradient clipping in place. Weight rows (one per
/// output unit) and bias entries are clipped so that
/// |g| <= clip * max(|w|, 1e-3).
void clip_gradient(const MdnParams& params, MdnParams& grad, double clip);

/// Clips `grad`, then applies one AdamW update with lr(state.step + 1) and
/// decoupled weight decay. Throws TrainingError on non-finite parameters.
void adamw_step(MdnParams& params, MdnParams& grad, AdamWState& state, const TrainConfig& cfg);

/// Column-per-sample training data.
struct Dataset {
  Eigen::MatrixXd inputs;   // input_dim x n
  Eigen::MatrixXd targets;  // output_dim x n
  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(inputs.cols()); }
};

/// Fresh LeCun-uniform init from stream.split(0), mini-batches drawn with
/// replacement from stream.split(1) (full batch when n <= batch_size).
/// `loss_trace`, if given, receives the mini-batch loss of every step.
MdnParams train_member(const Dataset& data, const MdnArch& arch, const TrainConfig& cfg, const RngStream& stream,
                       std::vector<double>* loss_trace = nullptr);

struct MdnEnsemble {
  std::vector<MdnParams> members;
  std::vector<double> member_weights;
  [[nodiscard]] const MdnArch& arch() const { return members.front().arch(); }
  [[nodiscard]] std::size_t size() const { return members.size(); }
};

/// Member z is trained by train_member with master.split(z); members run in parallel.
MdnEnsemble train_ensemble(const Dataset& data, const MdnArch& arch, const TrainConfig& cfg, std::size_t n_ens,
                           const RngStream& master);

EnsemblePrediction predict_ensemble(const MdnEnsemble& ens, std::span<const double> x);
EnsemblePrediction predict_ensemble(const MdnEnsemble& ens, const Eigen::VectorXd& x);
/// One prediction per column of `inputs`.
std::vector<EnsemblePrediction> predict_ensemble_batch(const MdnEnsemble& ens, const Eigen::MatrixXd& inputs);

/// Flat JSON checkpoint: architecture dims, step count and row-major parameter blocks.
void save_checkpoint(const MdnParams& params, std::size_t step_count, const std::string& path);
struct Checkpoint {
  MdnParams params;
  std::size_t step_count;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace milb
