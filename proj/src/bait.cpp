#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "milb/acquisition.hpp"

namespace milb {

namespace {

Eigen::MatrixXd burden_inverse(const Eigen::MatrixXd& labeled, Eigen::Index d, double lambda) {
  Eigen::MatrixXd m = lambda * Eigen::MatrixXd::Identity(d, d);
  if (labeled.rows() > 0) m.selfadjointView<Eigen::Lower>().rankUpdate(labeled.transpose());
  m = m.selfadjointView<Eigen::Lower>();
  return m.llt().solve(Eigen::MatrixXd::Identity(d, d));
}

void check_shapes(const Eigen::MatrixXd& candidates, const Eigen::MatrixXd& labeled, double lambda) {
  if (labeled.rows() > 0 && labeled.cols() != candidates.cols())
    throw DimensionError("select_bait: embedding dimension mismatch");
  if (!(lambda > 0.0)) throw std::invalid_argument("select_bait: ridge must be positive");
}

}  // namespace

double bait_objective(const Eigen::MatrixXd& candidates, const Eigen::MatrixXd& labeled,
                      std::span<const std::size_t> chosen, double lambda) {
  check_shapes(candidates, labeled, lambda);
  const Eigen::Index d = candidates.cols();
  Eigen::MatrixXd m = lambda * Eigen::MatrixXd::Identity(d, d);
  if (labeled.rows() > 0) m += labeled.transpose() * labeled;
  for (std::size_t i : chosen) {
    const auto row = candidates.row(static_cast<Eigen::Index>(i));
    m += row.transpose() * row;
  }
  const Eigen::MatrixXd fisher = candidates.transpose() * candidates / static_cast<double>(candidates.rows());
  return m.ldlt().solve(fisher).trace();
}

std::vector<std::size_t> select_bait(const Eigen::MatrixXd& candidates, const Eigen::MatrixXd& labeled, std::size_t k,
                                     double lambda) {
  check_shapes(candidates, labeled, lambda);
  const auto n = static_cast<std::size_t>(candidates.rows());
  if (k == 0 || k > n) throw std::invalid_argument("select_bait: require 1 <= k <= pool size");
  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (k == n) return all;

  const Eigen::Index d = candidates.cols();
  Eigen::MatrixXd m_inv = burden_inverse(labeled, d, lambda);
  Eigen::MatrixXd fisher = Eigen::MatrixXd::Zero(d, d);
  fisher.selfadjointView<Eigen::Lower>().rankUpdate(candidates.transpose(), 1.0 / static_cast<double>(n));
  fisher = fisher.selfadjointView<Eigen::Lower>();

  // q_i = g_i^T M^-1 g_i and r_i = g_i^T M^-1 F M^-1 g_i; adding g_i lowers the
  // objective by r_i / (1 + q_i).
  const Eigen::MatrixXd whitened = candidates * m_inv;
  Eigen::VectorXd q = whitened.cwiseProduct(candidates).rowwise().sum();
  Eigen::VectorXd r = (whitened * fisher).cwiseProduct(whitened).rowwise().sum();

  const std::size_t n_forward = std::min(2 * k, n);
  std::vector<char> taken(n, 0);
  std::vector<std::size_t> chosen;
  chosen.reserve(n_forward);
  for (std::size_t step = 0; step < n_forward; ++step) {
    std::size_t best = n;
    double best_gain = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (taken[i]) continue;
      const auto ii = static_cast<Eigen::Index>(i);
      const double gain = r[ii] / (1.0 + q[ii]);
      if (best == n || gain > best_gain) {
        best = i;
        best_gain = gain;
      }
    }
    taken[best] = 1;
    chosen.push_back(best);
    const Eigen::VectorXd g = candidates.row(static_cast<Eigen::Index>(best)).transpose();
    const Eigen::VectorXd u = m_inv * g;
    const double c = 1.0 + g.dot(u);
    const Eigen::VectorXd fu = fisher * u;
    const Eigen::VectorXd t = m_inv * fu;
    const double s = u.dot(fu);
    const Eigen::VectorXd a = candidates * u;
    const Eigen::VectorXd b = candidates * t;
    q.array() -= a.array().square() / c;
    r.array() += -2.0 * a.array() * b.array() / c + a.array().square() * s / (c * c);
    m_inv.noalias() -= u * u.transpose() / c;
  }

  // Backward: drop the point whose removal raises the objective least,
  // u^T F u / (1 - g^T u) with u = M^-1 g.
  std::sort(chosen.begin(), chosen.end());
  while (chosen.size() > k) {
    std::size_t worst_pos = 0;
    double worst_increase = 0.0;
    Eigen::VectorXd worst_u;
    double worst_denom = 1.0;
    for (std::size_t pos = 0; pos < chosen.size(); ++pos) {
      const Eigen::VectorXd g = candidates.row(static_cast<Eigen::Index>(chosen[pos])).transpose();
      Eigen::VectorXd u = m_inv * g;
      const double denom = 1.0 - g.dot(u);
      const double increase = u.dot(fisher * u) / denom;
      if (pos == 0 || increase <= worst_increase) {
        worst_pos = pos;
        worst_increase = increase;
        worst_u = std::move(u);
        worst_denom = denom;
      }
    }
    m_inv.noalias() += worst_u * worst_u.transpose() / worst_denom;
    chosen.erase(chosen.begin() + static_cast<std::ptrdiff_t>(worst_pos));
  }
  return chosen;
}

}  // namespace milb
