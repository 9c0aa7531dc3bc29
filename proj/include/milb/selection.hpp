#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "milb/rng.hpp"

namespace milb {

enum class Strategy { topk, sbal, maxdist };

Strategy parse_strategy(const std::string& name);
std::string to_string(Strategy s);

struct BatchRequest {
  std::size_t k = 1;
  Strategy strategy = Strategy::topk;
  double temperature = 1.0;  // SBAL
  double weight = 1.0;       // MaxDist
  std::vector<std::size_t> exclusions;

  /// Throws std::invalid_argument unless 1 <= k <= pool_size - |exclusions|,
  /// T > 0, w >= 0 and every exclusion is a distinct valid index.
  void validate(std::size_t pool_size) const;
};

/// k highest scores among non-excluded indices, in pick order; ties go to the lower index.
std::vector<std::size_t> select_topk(std::span<const double> scores, const BatchRequest& req);

/// Gumbel-top-k: one Gumbel draw per index (excluded ones included, in index
/// order), then top-k of score / T + G among non-excluded indices.
std::vector<std::size_t> select_sbal(std::span<const double> scores, const BatchRequest& req, RngStream& stream);

/// Acquisition-weighted farthest-point sampling. Features (one row per pool
/// index) are standardised per column over all rows; scores are min-max
/// normalised over non-excluded indices (constant scores give zeros). Each
/// step picks argmax d_min * (1 + w * s) where d_min is the squared distance
/// to the nearest excluded or already selected row. Without any centre the
/// first pick is the highest score.
std::vector<std::size_t> select_maxdist(std::span<const double> scores, const Eigen::MatrixXd& features,
                                        const BatchRequest& req);

/// Dispatch on req.strategy; `features` is only read by MaxDist.
std::vector<std::size_t> select_batch(std::span<const double> scores, const Eigen::MatrixXd& features,
                                      const BatchRequest& req, RngStream& stream);

}  // namespace milb
