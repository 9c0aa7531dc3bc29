#include "milb/acquisition.hpp"

#include <cmath>
#include <ostream>

namespace milb {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kTwoPiE = kTwoPi * 2.718281828459045235360287471352;
}  // namespace

void write_scores_csv(const ScoreVector& scores, std::ostream& out) {
  out << "candidate_index,score\n";
  const auto old_precision = out.precision(17);
  for (std::size_t i = 0; i < scores.scores.size(); ++i) out << i << ',' << scores.scores[i] << '\n';
  out.precision(old_precision);
}

ScoreVector score_random(std::size_t n, RngStream& stream) {
  if (n == 0) throw std::invalid_argument("score_random: n must be positive");
  ScoreVector out{std::vector<double>(n), "random"};
  for (double& s : out.scores) s = stream.next_double();
  return out;
}

double epistemic_variance(const EnsemblePrediction& pred) {
  const auto n = static_cast<Eigen::Index>(pred.dim());
  Eigen::VectorXd centre = Eigen::VectorXd::Zero(n);
  std::vector<Eigen::VectorXd> means;
  means.reserve(pred.n_members());
  for (std::size_t z = 0; z < pred.n_members(); ++z) {
    means.push_back(pred.member_mixtures[z].mean());
    centre += pred.member_weights[z] * means.back();
  }
  double trace = 0.0;
  for (std::size_t z = 0; z < pred.n_members(); ++z) trace += pred.member_weights[z] * (means[z] - centre).squaredNorm();
  return trace;
}

double milb(const EnsemblePrediction& pred) {
  double aleatoric = 0.0;
  for (std::size_t z = 0; z < pred.n_members(); ++z)
    aleatoric += pred.member_weights[z] * entropy_upper(pred.member_mixtures[z]);
  return entropy_lower(marginal_mixture(pred)) - aleatoric;
}

double milb_explicit(const EnsemblePrediction& pred) {
  const std::size_t n = pred.dim();
  double first = 0.0;
  for (std::size_t z = 0; z < pred.n_members(); ++z) {
    const auto& mz = pred.member_mixtures[z];
    for (std::size_t i = 0; i < mz.n_components(); ++i) {
      const double beta_zi = pred.member_weights[z] * mz.weights()[static_cast<Eigen::Index>(i)];
      if (beta_zi == 0.0) continue;
      double inner = 0.0;
      for (std::size_t l = 0; l < pred.n_members(); ++l) {
        const auto& ml = pred.member_mixtures[l];
        for (std::size_t j = 0; j < ml.n_components(); ++j) {
          const double beta_lj = pred.member_weights[l] * ml.weights()[static_cast<Eigen::Index>(j)];
          double quad = 0.0;
          double det = 1.0;
          for (std::size_t d = 0; d < n; ++d) {
            const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
            const auto dd = static_cast<Eigen::Index>(d);
            const double s = mz.variances()(ii, dd) + ml.variances()(jj, dd);
            const double r = mz.means()(ii, dd) - ml.means()(jj, dd);
            quad += r * r / s;
            det *= kTwoPi * s;
          }
          inner += beta_lj * std::exp(-0.5 * quad) / std::sqrt(det);
        }
      }
      first -= beta_zi * std::log(inner);
    }
  }
  double second = 0.0;
  for (std::size_t z = 0; z < pred.n_members(); ++z) {
    const auto& mz = pred.member_mixtures[z];
    double member = 0.0;
    for (std::size_t i = 0; i < mz.n_components(); ++i) {
      const double alpha = mz.weights()[static_cast<Eigen::Index>(i)];
      if (alpha == 0.0) continue;
      double det = 1.0;
      for (std::size_t d = 0; d < n; ++d)
        det *= kTwoPiE * mz.variances()(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(d));
      member += alpha * (-std::log(alpha) + 0.5 * std::log(det));
    }
    second += pred.member_weights[z] * member;
  }
  return first - second;
}

ScoreVector score_epistemic_variance(std::span<const EnsemblePrediction> preds) {
  ScoreVector out{std::vector<double>(preds.size()), "variance"};
  for (std::size_t i = 0; i < preds.size(); ++i) out.scores[i] = epistemic_variance(preds[i]);
  return out;
}

ScoreVector score_milb(std::span<const EnsemblePrediction> preds) {
  ScoreVector out{std::vector<double>(preds.size()), "milb"};
  for (std::size_t i = 0; i < preds.size(); ++i) out.scores[i] = milb(preds[i]);
  return out;
}

MonteCarloEstimate mutual_information_mc(const EnsemblePrediction& pred, std::size_t n_samples, RngStream& stream) {
  RngStream marginal_stream = stream.split(0);
  const MonteCarloEstimate total = entropy_mc(marginal_mixture(pred), n_samples, marginal_stream);
  double estimate = total.estimate;
  double variance = total.stderr_ * total.stderr_;
  for (std::size_t z = 0; z < pred.n_members(); ++z) {
    RngStream member_stream = stream.split(z + 1);
    const MonteCarloEstimate h = entropy_mc(pred.member_mixtures[z], n_samples, member_stream);
    const double w = pred.member_weights[z];
    estimate -= w * h.estimate;
    variance += w * w * h.stderr_ * h.stderr_;
  }
  return {estimate, std::sqrt(variance)};
}

Eigen::MatrixXd FisherFactors::embeddings() const {
  const Eigen::Index a = score.cols();
  const Eigen::Index h = features.cols();
  Eigen::MatrixXd out(score.rows(), a * h);
  for (Eigen::Index s = 0; s < score.rows(); ++s)
    for (Eigen::Index i = 0; i < a; ++i) out.row(s).segment(i * h, h) = score(s, i) * features.row(s);
  return out;
}

FisherFactors fisher_factors(const MdnParams& member, const Eigen::MatrixXd& inputs, const RngStream& stream) {
  const auto& arch = member.arch();
  const Eigen::MatrixXd z = backbone_features(member, inputs);
  Eigen::MatrixXd head = member.head_weight() * z;
  head.colwise() += member.head_bias();
  const auto kn = static_cast<Eigen::Index>(arch.n_components * arch.output_dim);
  FisherFactors out{Eigen::MatrixXd(inputs.cols(), kn), z.transpose()};
  for (Eigen::Index s = 0; s < inputs.cols(); ++s) {
    const DiagGaussianMixture mix =
        head_to_mixture(arch, std::span<const double>(head.col(s).data(), static_cast<std::size_t>(head.rows())));
    RngStream draw = stream.split(static_cast<std::uint64_t>(s));
    const Eigen::VectorXd y = sample(mix, draw);
    const Eigen::VectorXd gamma = responsibilities(mix, std::span<const double>(y.data(), static_cast<std::size_t>(y.size())));
    const auto n = static_cast<Eigen::Index>(arch.output_dim);
    for (Eigen::Index k = 0; k < gamma.size(); ++k)
      for (Eigen::Index d = 0; d < n; ++d)
        out.score(s, k * n + d) = gamma[k] * (y[d] - mix.means()(k, d)) / mix.variances()(k, d);
  }
  return out;
}

Eigen::VectorXd fisher_embed(const MdnParams& member, std::span<const double> x, const RngStream& stream) {
  if (x.size() != member.arch().input_dim) throw DimensionError("fisher_embed: input dimension mismatch");
  const Eigen::MatrixXd input = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  return fisher_factors(member, input, stream).embeddings().row(0).transpose();
}

std::vector<Eigen::MatrixXd> fisher_sketch(std::span<const FisherFactors> sets, std::size_t max_dim,
                                           const RngStream& stream) {
  std::vector<Eigen::MatrixXd> out;
  if (sets.empty()) return out;
  const Eigen::Index a = sets.front().score.cols();
  const Eigen::Index h = sets.front().features.cols();
  for (const auto& s : sets)
    if (s.score.cols() != a || s.features.cols() != h) throw DimensionError("fisher_sketch: factor shapes disagree");
  if (static_cast<std::size_t>(a * h) <= max_dim) {
    for (const auto& s : sets) out.push_back(s.embeddings());
    return out;
  }
  const auto side = static_cast<Eigen::Index>(std::sqrt(static_cast<double>(max_dim)));
  const Eigen::Index p = std::min(a, std::max<Eigen::Index>(side, 1));
  const Eigen::Index q = std::min(h, std::max<Eigen::Index>(static_cast<Eigen::Index>(max_dim) / p, 1));
  auto projection = [](Eigen::Index rows, Eigen::Index cols, RngStream draw) {
    if (rows == cols) return Eigen::MatrixXd(Eigen::MatrixXd::Identity(rows, cols));
    Eigen::MatrixXd m(rows, cols);
    const double sd = 1.0 / std::sqrt(static_cast<double>(rows));
    for (Eigen::Index i = 0; i < rows; ++i)
      for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = normal(draw, 0.0, sd);
    return m;
  };
  const Eigen::MatrixXd s_score = projection(p, a, stream.split(0));
  const Eigen::MatrixXd s_feat = projection(q, h, stream.split(1));
  for (const auto& s : sets) {
    const FisherFactors reduced{s.score * s_score.transpose(), s.features * s_feat.transpose()};
    out.push_back(reduced.embeddings());
  }
  return out;
}

}  // namespace milb
