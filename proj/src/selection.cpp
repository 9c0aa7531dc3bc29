#include "milb/selection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace milb {

namespace {

std::vector<char> exclusion_mask(std::size_t n, const BatchRequest& req) {
  std::vector<char> mask(n, 0);
  for (std::size_t i : req.exclusions) mask[i] = 1;
  return mask;
}

std::vector<std::size_t> topk_of(const std::vector<double>& values, const std::vector<char>& excluded, std::size_t k) {
  std::vector<std::size_t> idx;
  idx.reserve(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    if (!excluded[i]) idx.push_back(i);
  auto better = [&](std::size_t a, std::size_t b) { return values[a] > values[b] || (values[a] == values[b] && a < b); };
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end(), better);
  idx.resize(k);
  return idx;
}

void check_scores(std::span<const double> scores) {
  for (double s : scores)
    if (!std::isfinite(s)) throw std::invalid_argument("selection: scores must be finite");
}

}  // namespace

Strategy parse_strategy(const std::string& name) {
  if (name == "topk") return Strategy::topk;
  if (name == "sbal") return Strategy::sbal;
  if (name == "maxdist") return Strategy::maxdist;
  throw std::invalid_argument("unknown strategy '" + name + "' (expected topk|sbal|maxdist)");
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::topk: return "topk";
    case Strategy::sbal: return "sbal";
    case Strategy::maxdist: return "maxdist";
  }
  return "topk";
}

void BatchRequest::validate(std::size_t pool_size) const {
  std::vector<char> seen(pool_size, 0);
  for (std::size_t i : exclusions) {
    if (i >= pool_size) throw std::invalid_argument("BatchRequest: exclusion index out of range");
    if (seen[i]) throw std::invalid_argument("BatchRequest: duplicate exclusion index");
    seen[i] = 1;
  }
  if (k == 0 || k > pool_size - exclusions.size())
    throw std::invalid_argument("BatchRequest: k must lie in [1, available pool]");
  if (!(temperature > 0.0)) throw std::invalid_argument("BatchRequest: temperature must be positive");
  if (!(weight >= 0.0)) throw std::invalid_argument("BatchRequest: weight must be nonnegative");
}

std::vector<std::size_t> select_topk(std::span<const double> scores, const BatchRequest& req) {
  req.validate(scores.size());
  check_scores(scores);
  return topk_of(std::vector<double>(scores.begin(), scores.end()), exclusion_mask(scores.size(), req), req.k);
}

std::vector<std::size_t> select_sbal(std::span<const double> scores, const BatchRequest& req, RngStream& stream) {
  req.validate(scores.size());
  check_scores(scores);
  std::vector<double> perturbed(scores.size());
  for (std::size_t i = 0; i < scores.size(); ++i) perturbed[i] = scores[i] / req.temperature + gumbel(stream);
  return topk_of(perturbed, exclusion_mask(scores.size(), req), req.k);
}

std::vector<std::size_t> select_maxdist(std::span<const double> scores, const Eigen::MatrixXd& features,
                                        const BatchRequest& req) {
  const std::size_t n = scores.size();
  req.validate(n);
  check_scores(scores);
  if (static_cast<std::size_t>(features.rows()) != n)
    throw std::invalid_argument("select_maxdist: one feature row per score required");
  const std::vector<char> excluded = exclusion_mask(n, req);

  const Eigen::RowVectorXd mean = features.colwise().mean();
  Eigen::MatrixXd z = features.rowwise() - mean;
  const Eigen::RowVectorXd sd =
      (z.colwise().squaredNorm() / static_cast<double>(n)).cwiseSqrt().cwiseMax(1e-8);
  z = z.array().rowwise() / sd.array();

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    if (excluded[i]) continue;
    lo = std::min(lo, scores[i]);
    hi = std::max(hi, scores[i]);
  }
  std::vector<double> s_norm(n, 0.0);
  if (hi > lo)
    for (std::size_t i = 0; i < n; ++i) s_norm[i] = excluded[i] ? 0.0 : (scores[i] - lo) / (hi - lo);

  Eigen::VectorXd d_min = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), std::numeric_limits<double>::infinity());
  for (std::size_t c : req.exclusions)
    d_min = d_min.cwiseMin((z.rowwise() - z.row(static_cast<Eigen::Index>(c))).rowwise().squaredNorm());

  std::vector<char> taken = excluded;
  std::vector<std::size_t> picked;
  picked.reserve(req.k);
  for (std::size_t step = 0; step < req.k; ++step) {
    std::size_t best = n;
    if (step == 0 && req.exclusions.empty()) {
      for (std::size_t i = 0; i < n; ++i)
        if (best == n || scores[i] > scores[best]) best = i;
    } else {
      double best_value = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        if (taken[i]) continue;
        const double value = d_min[static_cast<Eigen::Index>(i)] * (1.0 + req.weight * s_norm[i]);
        if (best == n || value > best_value) {
          best = i;
          best_value = value;
        }
      }
    }
    taken[best] = 1;
    picked.push_back(best);
    d_min = d_min.cwiseMin((z.rowwise() - z.row(static_cast<Eigen::Index>(best))).rowwise().squaredNorm());
  }
  return picked;
}

std::vector<std::size_t> select_batch(std::span<const double> scores, const Eigen::MatrixXd& features,
                                      const BatchRequest& req, RngStream& stream) {
  switch (req.strategy) {
    case Strategy::topk: return select_topk(scores, req);
    case Strategy::sbal: return select_sbal(scores, req, stream);
    case Strategy::maxdist: return select_maxdist(scores, features, req);
  }
  throw std::invalid_argument("select_batch: unknown strategy");
}

}  // namespace milb
