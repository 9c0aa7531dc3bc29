#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"
#include "milb/benchmarks.hpp"
#include "milb/mdn.hpp"
#include "milb/selection.hpp"
#include "milb/train.hpp"

namespace milb {

struct ExperimentConfig {
  std::string benchmark = "double_well";
  std::size_t hidden = 128;
  std::size_t depth = 3;
  std::size_t n_components = 8;
  std::size_t n_ens = 8;
  TrainConfig train;
  std::size_t pool_size = 50000;
  std::size_t test_size = 2000;
  std::size_t init_size = 100;
  std::size_t rounds = 20;
  std::size_t query_batch = 50;
  std::string acquisition = "milb";  // random | variance | milb | bait | coreset
  std::string strategy = "topk";     // topk | sbal | maxdist
  double sbal_temperature = 1.0;
  double maxdist_weight = 1.0;
  std::vector<std::uint64_t> seeds = {0, 1, 2, 3, 4};
  std::size_t chunk_size = 256;
  std::size_t probe_size = 100;
  std::size_t bait_max_dim = 1024;

  /// Throws std::invalid_argument describing the first inconsistency.
  void validate() const;
  [[nodiscard]] MdnArch arch(const Simulator& sim) const;
};

/// Full-scale settings for a benchmark id.
ExperimentConfig default_config(const std::string& benchmark);

/// Canonical JSON (keys sorted). Missing keys in from_json keep the
/// benchmark defaults; unknown keys are rejected.
nlohmann::json to_json(const ExperimentConfig& cfg);
ExperimentConfig config_from_json(const nlohmann::json& doc);
ExperimentConfig load_config(const std::string& path);

/// 16 hex digits of FNV-1a over the canonical JSON without the seed list.
std::string config_hash(const ExperimentConfig& cfg);

struct RoundRecord {
  std::size_t round = 0;
  std::size_t n_labeled = 0;
  double test_nll = 0.0;
  double probe_milb = 0.0;               // mean MI-LB over the fixed probe inputs
  std::vector<std::size_t> acquired;     // batch chosen after this evaluation
  double elapsed_seconds = 0.0;          // kept out of the JSON record
};

struct RunRecord {
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string benchmark;
  std::string acquisition;
  std::string strategy;
  std::vector<RoundRecord> rounds;
};

/// Deterministic record JSON (no wall-clock fields).
nlohmann::json to_json(const RunRecord& record);
RunRecord record_from_json(const nlohmann::json& doc);
/// Per-round elapsed seconds, for the timing sidecar.
nlohmann::json timing_json(const RunRecord& record);

/// Raised when a run cannot continue; the message names the round.
struct ExperimentError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Mean -log p(y|x) of the ensemble marginal over test columns.
double evaluate_nll(const MdnEnsemble& ens, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                    std::size_t chunk_size = 256);

/// Acquisition scores of the given pool columns; only random/variance/milb.
std::vector<double> score_candidates(const std::string& acquisition, const MdnEnsemble& ens,
                                     const Eigen::MatrixXd& inputs, RngStream& stream, std::size_t chunk_size);

using ProgressFn = std::function<void(const RoundRecord&)>;

/// Train, evaluate, score, select and label for cfg.rounds rounds, retraining
/// from scratch each round. Streams derive from RngStream(seed): pool 1-3,
/// training 4.r, acquisition 5.r, probe inputs 6.
RunRecord run_experiment(const ExperimentConfig& cfg, std::uint64_t seed, const ProgressFn& progress = {});

struct CurveRow {
  std::size_t round;
  std::size_t n_labeled;
  double mean, min, max, std;  // std uses n - 1, zero for one record
};

/// Per-round statistics of test NLL across records of one configuration.
std::vector<CurveRow> aggregate(const std::vector<RunRecord>& records);

/// Writes `round,n_labeled,nll_mean,nll_min,nll_max,nll_std`; when more than
/// one group is given an `acquisition` column (acquisition/strategy label) leads.
void write_curves_csv(const std::vector<std::pair<std::string, std::vector<CurveRow>>>& groups, std::ostream& out);

/// Version string baked in at configure time (git describe when available).
std::string version_string();

}  // namespace milb
