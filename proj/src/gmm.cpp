#include "milb/gmm.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

namespace milb {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // log(2 pi)
constexpr double kLog2PiE = kLog2Pi + 1.0;                      // log(2 pi e)

void check_weights(const Eigen::VectorXd& w, const char* what) {
  if (w.size() == 0) throw DimensionError(std::string(what) + ": no components");
  double total = 0.0;
  for (Eigen::Index i = 0; i < w.size(); ++i) {
    if (!(w[i] >= 0.0) || !std::isfinite(w[i]))
      throw std::domain_error(std::string(what) + ": weights must be finite and nonnegative");
    total += w[i];
  }
  if (std::abs(total - 1.0) > kWeightTolerance)
    throw std::domain_error(std::string(what) + ": weights must sum to 1 (got " +
                            std::to_string(total) + ")");
}

// Log-sum-exp of `terms` ignoring -inf entries.
double log_sum_exp(const double* terms, std::size_t n) {
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) peak = std::max(peak, terms[i]);
  if (!std::isfinite(peak)) return peak;
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += std::exp(terms[i] - peak);
  return peak + std::log(acc);
}

// log N(y; mu_i, diag(var_i)) for every component.
void component_log_densities(const DiagGaussianMixture& m, std::span<const double> y,
                             std::vector<double>& out) {
  const auto& means = m.means();
  const auto& vars = m.variances();
  const std::size_t k = m.n_components();
  const std::size_t n = m.dim();
  out.resize(k);
  for (std::size_t i = 0; i < k; ++i) {
    double acc = 0.0;
    for (std::size_t d = 0; d < n; ++d) {
      const double v = vars(i, d);
      const double r = y[d] - means(i, d);
      acc += std::log(v) + r * r / v;
    }
    out[i] = -0.5 * (static_cast<double>(n) * kLog2Pi + acc);
  }
}

}  // namespace

DiagGaussianMixture::DiagGaussianMixture(Eigen::VectorXd weights, Eigen::MatrixXd means,
                                         Eigen::MatrixXd variances)
    : weights_(std::move(weights)), means_(std::move(means)), variances_(std::move(variances)) {
  if (means_.rows() != weights_.size() || variances_.rows() != weights_.size())
    throw DimensionError("DiagGaussianMixture: component counts disagree");
  if (means_.cols() == 0 || means_.cols() != variances_.cols())
    throw DimensionError("DiagGaussianMixture: means and variances must share a nonzero dimension");
  check_weights(weights_, "DiagGaussianMixture");
  for (Eigen::Index i = 0; i < variances_.size(); ++i) {
    const double v = variances_.data()[i];
    if (!(v >= kVarFloor) || !std::isfinite(v))
      throw std::domain_error("DiagGaussianMixture: variances must be finite and >= var_floor");
  }
  if (!means_.allFinite()) throw std::domain_error("DiagGaussianMixture: means must be finite");
}

DiagGaussianMixture DiagGaussianMixture::gaussian(const Eigen::VectorXd& mean,
                                                  const Eigen::VectorXd& variances) {
  return DiagGaussianMixture(Eigen::VectorXd::Ones(1), mean.transpose(), variances.transpose());
}

Eigen::VectorXd DiagGaussianMixture::mean() const {
  return means_.transpose() * weights_;
}

EnsemblePrediction::EnsemblePrediction(std::vector<DiagGaussianMixture> members,
                                       std::vector<double> weights)
    : member_mixtures(std::move(members)), member_weights(std::move(weights)) {
  validate();
}

EnsemblePrediction::EnsemblePrediction(std::vector<DiagGaussianMixture> members)
    : member_mixtures(std::move(members)) {
  member_weights.assign(member_mixtures.size(),
                        member_mixtures.empty() ? 0.0 : 1.0 / static_cast<double>(member_mixtures.size()));
  validate();
}

void EnsemblePrediction::validate() const {
  if (member_mixtures.empty()) throw DimensionError("EnsemblePrediction: no members");
  if (member_weights.size() != member_mixtures.size())
    throw DimensionError("EnsemblePrediction: one weight per member required");
  const std::size_t n = member_mixtures.front().dim();
  for (const auto& m : member_mixtures)
    if (m.dim() != n) throw DimensionError("EnsemblePrediction: members disagree on output dimension");
  check_weights(Eigen::Map<const Eigen::VectorXd>(member_weights.data(),
                                                  static_cast<Eigen::Index>(member_weights.size())),
                "EnsemblePrediction");
}

double log_pdf(const DiagGaussianMixture& m, std::span<const double> y) {
  if (y.size() != m.dim()) throw DimensionError("log_pdf: observation dimension mismatch");
  std::vector<double> terms;
  component_log_densities(m, y, terms);
  for (std::size_t i = 0; i < terms.size(); ++i) terms[i] += std::log(m.weights()[i]);
  return log_sum_exp(terms.data(), terms.size());
}

double log_pdf(const DiagGaussianMixture& m, const Eigen::VectorXd& y) {
  return log_pdf(m, std::span<const double>(y.data(), static_cast<std::size_t>(y.size())));
}

Eigen::VectorXd responsibilities(const DiagGaussianMixture& m, std::span<const double> y) {
  if (y.size() != m.dim()) throw DimensionError("responsibilities: observation dimension mismatch");
  std::vector<double> terms;
  component_log_densities(m, y, terms);
  for (std::size_t i = 0; i < terms.size(); ++i) terms[i] += std::log(m.weights()[i]);
  const double total = log_sum_exp(terms.data(), terms.size());
  Eigen::VectorXd gamma(static_cast<Eigen::Index>(terms.size()));
  for (std::size_t i = 0; i < terms.size(); ++i) gamma[static_cast<Eigen::Index>(i)] = std::exp(terms[i] - total);
  return gamma;
}

std::size_t sample_component(const DiagGaussianMixture& m, RngStream& stream) {
  const double u = stream.next_double();
  double cumulative = 0.0;
  const std::size_t k = m.n_components();
  for (std::size_t i = 0; i < k; ++i) {
    cumulative += m.weights()[static_cast<Eigen::Index>(i)];
    if (u < cumulative) return i;
  }
  // u landed in the rounding gap above the cumulative sum: last positive weight.
  for (std::size_t i = k; i-- > 0;)
    if (m.weights()[static_cast<Eigen::Index>(i)] > 0.0) return i;
  return k - 1;
}

Eigen::VectorXd sample(const DiagGaussianMixture& m, RngStream& stream) {
  const auto c = static_cast<Eigen::Index>(sample_component(m, stream));
  Eigen::VectorXd y(static_cast<Eigen::Index>(m.dim()));
  for (Eigen::Index d = 0; d < y.size(); ++d)
    y[d] = m.means()(c, d) + std::sqrt(m.variances()(c, d)) * std_normal(stream);
  return y;
}

DiagGaussianMixture marginal_mixture(const EnsemblePrediction& e) {
  Eigen::Index total = 0;
  for (const auto& m : e.member_mixtures) total += static_cast<Eigen::Index>(m.n_components());
  const auto n = static_cast<Eigen::Index>(e.dim());
  Eigen::VectorXd w(total);
  Eigen::MatrixXd mu(total, n);
  Eigen::MatrixXd var(total, n);
  Eigen::Index row = 0;
  for (std::size_t z = 0; z < e.n_members(); ++z) {
    const auto& m = e.member_mixtures[z];
    const auto k = static_cast<Eigen::Index>(m.n_components());
    w.segment(row, k) = e.member_weights[z] * m.weights();
    mu.middleRows(row, k) = m.means();
    var.middleRows(row, k) = m.variances();
    row += k;
  }
  return DiagGaussianMixture(std::move(w), std::move(mu), std::move(var));
}

double entropy_exact_gaussian(std::span<const double> variances) {
  if (variances.empty()) throw DimensionError("entropy_exact_gaussian: empty variance vector");
  double acc = 0.0;
  for (double v : variances) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::domain_error("entropy_exact_gaussian: variances must be positive");
    acc += kLog2PiE + std::log(v);
  }
  return 0.5 * acc;
}

double entropy_exact_gaussian(const Eigen::VectorXd& variances) {
  return entropy_exact_gaussian(
      std::span<const double>(variances.data(), static_cast<std::size_t>(variances.size())));
}

double entropy_lower(const DiagGaussianMixture& m) {
  const auto k = static_cast<Eigen::Index>(m.n_components());
  const auto n = static_cast<Eigen::Index>(m.dim());
  const auto& w = m.weights();
  const auto& mu = m.means();
  const auto& var = m.variances();

  std::vector<double> log_w(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) log_w[static_cast<std::size_t>(i)] = std::log(w[i]);

  std::vector<double> terms(static_cast<std::size_t>(k));
  double h = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (w[i] == 0.0) continue;
    for (Eigen::Index j = 0; j < k; ++j) {
      double acc = 0.0;
      for (Eigen::Index d = 0; d < n; ++d) {
        const double s = var(i, d) + var(j, d);
        const double r = mu(i, d) - mu(j, d);
        acc += std::log(s) + r * r / s;
      }
      terms[static_cast<std::size_t>(j)] =
          log_w[static_cast<std::size_t>(j)] - 0.5 * (static_cast<double>(n) * kLog2Pi + acc);
    }
    h -= w[i] * log_sum_exp(terms.data(), terms.size());
  }
  return h;
}

double entropy_upper(const DiagGaussianMixture& m) {
  const auto k = static_cast<Eigen::Index>(m.n_components());
  const auto n = static_cast<Eigen::Index>(m.dim());
  const auto& w = m.weights();
  const auto& var = m.variances();
  double h = 0.0;
  for (Eigen::Index i = 0; i < k; ++i) {
    if (w[i] == 0.0) continue;
    double log_det = 0.0;
    for (Eigen::Index d = 0; d < n; ++d) log_det += std::log(var(i, d));
    h += w[i] * (-std::log(w[i]) + 0.5 * (static_cast<double>(n) * kLog2PiE + log_det));
  }
  return h;
}

MonteCarloEstimate entropy_mc(const DiagGaussianMixture& m, std::size_t n_samples, RngStream& stream) {
  if (n_samples < 2) throw std::invalid_argument("entropy_mc: need at least two samples");
  const auto k = static_cast<Eigen::Index>(m.n_components());
  const auto n = static_cast<Eigen::Index>(m.dim());
  // log w_i - 0.5 (N log 2 pi + log |C_i|), hoisted out of the sample loop.
  std::vector<double> offset(static_cast<std::size_t>(k));
  for (Eigen::Index i = 0; i < k; ++i) {
    double log_det = 0.0;
    for (Eigen::Index d = 0; d < n; ++d) log_det += std::log(m.variances()(i, d));
    offset[static_cast<std::size_t>(i)] =
        std::log(m.weights()[i]) - 0.5 * (static_cast<double>(n) * kLog2Pi + log_det);
  }
  const Eigen::MatrixXd inv_var = m.variances().cwiseInverse();
  std::vector<double> terms(static_cast<std::size_t>(k));

  // Welford accumulation of -log p(Y).
  double mean = 0.0;
  double m2 = 0.0;
  Eigen::VectorXd y;
  for (std::size_t s = 0; s < n_samples; ++s) {
    y = sample(m, stream);
    for (Eigen::Index i = 0; i < k; ++i) {
      double quad = 0.0;
      for (Eigen::Index d = 0; d < n; ++d) {
        const double r = y[d] - m.means()(i, d);
        quad += r * r * inv_var(i, d);
      }
      terms[static_cast<std::size_t>(i)] = offset[static_cast<std::size_t>(i)] - 0.5 * quad;
    }
    const double v = -log_sum_exp(terms.data(), terms.size());
    const double delta = v - mean;
    mean += delta / static_cast<double>(s + 1);
    m2 += delta * (v - mean);
  }
  const double var = m2 / static_cast<double>(n_samples - 1);
  return {mean, std::sqrt(var / static_cast<double>(n_samples))};
}

}  // namespace milb
