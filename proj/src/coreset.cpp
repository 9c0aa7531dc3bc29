#include <limits>
#include <stdexcept>

#include "milb/acquisition.hpp"

namespace milb {

std::vector<std::size_t> select_coreset(const Eigen::MatrixXd& features, const Eigen::MatrixXd& labeled,
                                        std::size_t k) {
  const auto n = static_cast<std::size_t>(features.rows());
  if (k == 0 || k > n) throw std::invalid_argument("select_coreset: require 1 <= k <= pool size");
  if (labeled.rows() > 0 && labeled.cols() != features.cols())
    throw DimensionError("select_coreset: feature dimension mismatch");

  // Squared distance to the nearest centre; -1 marks picked candidates.
  Eigen::VectorXd nearest = Eigen::VectorXd::Constant(features.rows(), std::numeric_limits<double>::infinity());
  for (Eigen::Index c = 0; c < labeled.rows(); ++c)
    nearest = nearest.cwiseMin((features.rowwise() - labeled.row(c)).rowwise().squaredNorm());

  std::vector<std::size_t> picked;
  picked.reserve(k);
  for (std::size_t step = 0; step < k; ++step) {
    Eigen::Index best = -1;
    for (Eigen::Index i = 0; i < nearest.size(); ++i)
      if (nearest[i] >= 0.0 && (best < 0 || nearest[i] > nearest[best])) best = i;
    picked.push_back(static_cast<std::size_t>(best));
    nearest = nearest.cwiseMin((features.rowwise() - features.row(best)).rowwise().squaredNorm());
    nearest[best] = -1.0;
  }
  return picked;
}

}  // namespace milb
