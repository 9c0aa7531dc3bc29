#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "milb/gmm.hpp"
#include "milb/mdn.hpp"
#include "milb/rng.hpp"

namespace milb {

/// One finite score per pool candidate, tagged with the acquisition that produced it.
struct ScoreVector {
  std::vector<double> scores;
  std::string kind;
};

/// Writes `candidate_index,score` rows with a header line.
void write_scores_csv(const ScoreVector& scores, std::ostream& out);

ScoreVector score_random(std::size_t n, RngStream& stream);

/// Trace of the w-weighted covariance of member mixture means.
double epistemic_variance(const EnsemblePrediction& pred);
/// entropy_lower(marginal) - sum_z w_z entropy_upper(member_z).
double milb(const EnsemblePrediction& pred);
/// Same quantity written out as the explicit double sum over member
/// components, evaluated in linear space without shared helpers.
double milb_explicit(const EnsemblePrediction& pred);

ScoreVector score_epistemic_variance(std::span<const EnsemblePrediction> preds);
ScoreVector score_milb(std::span<const EnsemblePrediction> preds);

/// Monte-Carlo mutual information H(marginal) - sum_z w_z H(member_z), with
/// independent draws per term; stderr combines the term stderrs.
MonteCarloEstimate mutual_information_mc(const EnsemblePrediction& pred, std::size_t n_samples, RngStream& stream);

/// Last-layer mean-head Fisher factors of one member at a set of inputs.
/// Row s of `score` holds gamma_k (y_d - mu_kd) / var_kd in (k, d) order for
/// one draw y ~ p(.|x_s); row s of `features` is the backbone activation z(x_s).
/// The embedding is the row-wise Kronecker product score (x) features.
struct FisherFactors {
  Eigen::MatrixXd score;     // n x (K * N)
  Eigen::MatrixXd features;  // n x hidden
  [[nodiscard]] std::size_t embedding_dim() const {
    return static_cast<std::size_t>(score.cols() * features.cols());
  }
  /// Exact embeddings, n x (K * N * hidden), flattened in (k, d, h) order.
  [[nodiscard]] Eigen::MatrixXd embeddings() const;
};

/// Draws one y per column of `inputs` from `member` using stream.split(column).
FisherFactors fisher_factors(const MdnParams& member, const Eigen::MatrixXd& inputs, const RngStream& stream);

/// Gradient of log p(y|x) with respect to the mean-head weights for one draw
/// y ~ p(.|x); equals row 0 of fisher_factors(...).embeddings() for a single input.
Eigen::VectorXd fisher_embed(const MdnParams& member, std::span<const double> x, const RngStream& stream);

/// Embeddings of one or more factor sets, exact when the embedding dimension is
/// at most `max_dim`, otherwise projected with a shared Kronecker sketch
/// S_score (x) S_features whose entries are N(0, 1/rows) drawn from `stream`.
/// Inner products are preserved in expectation.
std::vector<Eigen::MatrixXd> fisher_sketch(std::span<const FisherFactors> sets, std::size_t max_dim,
                                           const RngStream& stream);

inline constexpr double kBaitRidge = 1e-3;
inline constexpr std::size_t kBaitMaxDim = 1024;

/// tr((lambda I + L^T L + S^T S)^{-1} F) with F the mean outer product of the
/// candidate rows and S the rows in `chosen`.
double bait_objective(const Eigen::MatrixXd& candidates, const Eigen::MatrixXd& labeled,
                      std::span<const std::size_t> chosen, double lambda);

/// Forward greedy over min(2k, n) candidates followed by backward removal down
/// to k. Forward ties keep the lowest index; backward ties drop the highest.
/// Returned indices are ascending.
std::vector<std::size_t> select_bait(const Eigen::MatrixXd& candidates, const Eigen::MatrixXd& labeled, std::size_t k,
                                     double lambda = kBaitRidge);

/// k-center greedy on Euclidean distance, distances initialised from `labeled`
/// (may have zero rows). Indices are returned in pick order.
std::vector<std::size_t> select_coreset(const Eigen::MatrixXd& features, const Eigen::MatrixXd& labeled,
                                        std::size_t k);

/// Uniform distribution on the unit circle against two antipodal arcs of
/// half-width delta centred on the poles.
struct VarianceDemoReport {
  double delta;
  double trace_variance_circle;
  double trace_variance_caps;
  double entropy_circle;       // log(2 pi), arc-length coordinate
  double entropy_caps;         // log(4 delta)
  double entropy_gap;          // entropy_circle - entropy_caps
  double entropy_gap_mc;       // -mean log density over draws
  double entropy_gap_histogram;  // Miller-Madow histogram estimate
  bool passed;                 // equal variances within 0.01, gap matches within 1e-3
};

VarianceDemoReport variance_failure_demo(double delta, std::size_t n_samples, RngStream& stream);

}  // namespace milb
