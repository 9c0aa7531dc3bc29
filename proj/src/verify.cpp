#include "milb/verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>

#include "milb/acquisition.hpp"
#include "milb/mdn.hpp"
#include "milb/parallel.hpp"
#include "milb/selection.hpp"

namespace milb {

namespace {

std::size_t uniform_int(RngStream& s, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(s.next_u64() % (hi - lo + 1));
}

DiagGaussianMixture random_mixture_of_dim(RngStream& stream, std::size_t k, std::size_t n) {
  const std::vector<double> alpha(k, 1.0);
  const auto w = dirichlet(stream, alpha);
  Eigen::VectorXd weights = Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(k));
  Eigen::MatrixXd means(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(n));
  Eigen::MatrixXd vars(means.rows(), means.cols());
  for (Eigen::Index i = 0; i < means.rows(); ++i)
    for (Eigen::Index d = 0; d < means.cols(); ++d) {
      means(i, d) = normal(stream, 0.0, 3.0);
      vars(i, d) = std::max(std::exp(std_normal(stream)), kVarFloor);
    }
  // Dirichlet output sums to one up to rounding; renormalise before validation.
  weights /= weights.sum();
  return DiagGaussianMixture(std::move(weights), std::move(means), std::move(vars));
}

// Farthest-point reference: standardise columns, then recompute every
// candidate's nearest-centre distance from scratch at each step.
std::vector<std::size_t> farthest_point_reference(const Eigen::MatrixXd& features, const std::vector<std::size_t>& centres,
                                                  std::size_t k) {
  const Eigen::Index n = features.rows();
  Eigen::MatrixXd z = features;
  for (Eigen::Index c = 0; c < z.cols(); ++c) {
    const double mean = z.col(c).mean();
    const double sd = std::max(std::sqrt((z.col(c).array() - mean).square().mean()), 1e-8);
    z.col(c) = (z.col(c).array() - mean) / sd;
  }
  std::vector<std::size_t> all = centres;
  std::vector<std::size_t> picked;
  for (std::size_t step = 0; step < k; ++step) {
    Eigen::Index best = -1;
    double best_d = -1.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (std::find(all.begin(), all.end(), static_cast<std::size_t>(i)) != all.end()) continue;
      double d = std::numeric_limits<double>::infinity();
      for (std::size_t c : all) d = std::min(d, (z.row(i) - z.row(static_cast<Eigen::Index>(c))).squaredNorm());
      if (d > best_d) {
        best_d = d;
        best = i;
      }
    }
    picked.push_back(static_cast<std::size_t>(best));
    all.push_back(static_cast<std::size_t>(best));
  }
  return picked;
}

}  // namespace

DiagGaussianMixture random_mixture(RngStream& stream, std::size_t max_k, std::size_t max_n) {
  const std::size_t k = uniform_int(stream, 1, max_k);
  const std::size_t n = uniform_int(stream, 1, max_n);
  return random_mixture_of_dim(stream, k, n);
}

EnsemblePrediction random_ensemble(RngStream& stream, std::size_t max_ens, std::size_t max_k, std::size_t max_n) {
  const std::size_t n_ens = uniform_int(stream, 1, max_ens);
  const std::size_t n = uniform_int(stream, 1, max_n);
  std::vector<DiagGaussianMixture> members;
  for (std::size_t z = 0; z < n_ens; ++z) members.push_back(random_mixture_of_dim(stream, uniform_int(stream, 1, max_k), n));
  return EnsemblePrediction(std::move(members));
}

SuiteResult verify_entropy_sandwich(std::size_t n_mixtures, std::size_t n_samples, const RngStream& stream) {
  SuiteResult r{"entropy_sandwich", n_mixtures, 0, -std::numeric_limits<double>::infinity()};
  std::vector<double> margin(n_mixtures);
  parallel_for(n_mixtures, [&](std::size_t i) {
    RngStream s = stream.split(i);
    const auto m = random_mixture(s, 8, 20);
    const auto mc = entropy_mc(m, n_samples, s);
    const double low = entropy_lower(m) - (mc.estimate + 3.0 * mc.stderr_);
    const double high = (mc.estimate - 3.0 * mc.stderr_) - entropy_upper(m);
    margin[i] = std::max(low, high);
  });
  for (double m : margin) {
    r.worst = std::max(r.worst, m);
    if (m > 0.0) ++r.failures;
  }
  return r;
}

SuiteResult verify_milb_certificate(std::size_t n_ensembles, std::size_t n_samples, const RngStream& stream) {
  SuiteResult r{"milb_certificate", n_ensembles, 0, -std::numeric_limits<double>::infinity()};
  std::vector<double> margin(n_ensembles);
  std::vector<char> forms_agree(n_ensembles);
  parallel_for(n_ensembles, [&](std::size_t i) {
    RngStream s = stream.split(i);
    const auto e = random_ensemble(s, 4, 3, 4);
    const double score = milb(e);
    const auto mi = mutual_information_mc(e, n_samples, s);
    margin[i] = score - (mi.estimate + 3.0 * mi.stderr_);
    forms_agree[i] = std::abs(score - milb_explicit(e)) <= 1e-10 * std::max(1.0, std::abs(score));
  });
  for (std::size_t i = 0; i < n_ensembles; ++i) {
    r.worst = std::max(r.worst, margin[i]);
    if (margin[i] > 0.0 || !forms_agree[i]) ++r.failures;
  }
  return r;
}

SuiteResult verify_gradients(std::size_t n_draws, const RngStream& stream) {
  SuiteResult r{"gradient_check", n_draws, 0, 0.0};
  constexpr double h = 1e-5;
  for (std::size_t draw = 0; draw < n_draws; ++draw) {
    RngStream s = stream.split(draw);
    MdnArch arch;
    arch.input_dim = uniform_int(s, 1, 4);
    arch.output_dim = uniform_int(s, 1, 3);
    arch.hidden = uniform_int(s, 3, 8);
    arch.depth = uniform_int(s, 1, 3);
    arch.n_components = uniform_int(s, 1, 3);
    MdnParams params = init_mdn(arch, s);
    for (Eigen::Index i = 0; i < params.head_bias().size(); ++i) params.head_bias()[i] = normal(s, 0.0, 0.5);
    Eigen::MatrixXd x(static_cast<Eigen::Index>(arch.input_dim), 3);
    Eigen::MatrixXd y(static_cast<Eigen::Index>(arch.output_dim), 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = std_normal(s);
    for (Eigen::Index i = 0; i < y.size(); ++i) y.data()[i] = std_normal(s);
    const auto analytic = grad_nll(params, x, y);
    double worst = 0.0;
    for (Eigen::Index p = 0; p < params.flat().size(); ++p) {
      MdnParams plus = params, minus = params;
      plus.flat()[p] += h;
      minus.flat()[p] -= h;
      const double fd = (nll_loss(plus, x, y) - nll_loss(minus, x, y)) / (2.0 * h);
      const double g = analytic.gradient.flat()[p];
      worst = std::max(worst, std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), 1e-6}));
    }
    r.worst = std::max(r.worst, worst);
    if (!(worst < 1e-4)) ++r.failures;
  }
  return r;
}

SuiteResult verify_selection_limits(std::size_t n_instances, const RngStream& stream) {
  SuiteResult r{"selection_limits", 2 * n_instances, 0, 0.0};
  for (std::size_t t = 0; t < n_instances; ++t) {
    RngStream s = stream.split(t);
    const std::size_t n = 100;
    std::vector<double> scores(n);
    for (double& v : scores) v = std_normal(s);
    std::set<std::size_t> excl;
    const std::size_t n_excl = uniform_int(s, 1, 10);
    while (excl.size() < n_excl) excl.insert(uniform_int(s, 0, n - 1));
    BatchRequest req;
    req.k = uniform_int(s, 1, 20);
    req.exclusions.assign(excl.begin(), excl.end());

    req.temperature = 1e-9;
    RngStream g = s.split(1);
    auto sbal = select_sbal(scores, req, g);
    auto topk = select_topk(scores, req);
    std::sort(sbal.begin(), sbal.end());
    std::sort(topk.begin(), topk.end());
    if (sbal != topk) ++r.failures;

    Eigen::MatrixXd features(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(uniform_int(s, 1, 6)));
    for (Eigen::Index i = 0; i < features.size(); ++i) features.data()[i] = std_normal(s);
    req.weight = 0.0;
    auto md = select_maxdist(scores, features, req);
    auto fp = farthest_point_reference(features, req.exclusions, req.k);
    std::sort(md.begin(), md.end());
    std::sort(fp.begin(), fp.end());
    if (md != fp) ++r.failures;
  }
  r.worst = static_cast<double>(r.failures);
  return r;
}

SuiteResult verify_closed_forms() {
  SuiteResult r{"milb_closed_forms", 2, 0, 0.0};
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  const auto unit = DiagGaussianMixture::gaussian(Eigen::VectorXd::Zero(1), one);
  const double same = milb(EnsemblePrediction({unit, unit}));
  const double same_err = std::abs(same - 0.5 * std::log(2.0 / std::numbers::e));
  const double apart = milb(EnsemblePrediction(
      {DiagGaussianMixture::gaussian(Eigen::VectorXd::Constant(1, -50.0), one),
       DiagGaussianMixture::gaussian(Eigen::VectorXd::Constant(1, 50.0), one)}));
  const double apart_err = std::abs(apart - (std::log(2.0) + 0.5 * std::log(2.0 / std::numbers::e)));
  if (!(same_err <= 1e-9)) ++r.failures;
  if (!(apart_err <= 1e-6)) ++r.failures;
  r.worst = std::max(same_err, apart_err);
  return r;
}

SuiteResult verify_variance_demo(const RngStream& stream) {
  RngStream s = stream;
  const auto report = variance_failure_demo(std::numbers::pi / 8.0, 100000, s);
  SuiteResult r{"variance_failure_demo", 1, report.passed ? 0u : 1u,
                std::abs(report.entropy_gap_mc - std::log(4.0))};
  return r;
}

std::vector<SuiteResult> run_verify(std::uint64_t seed, bool quick) {
  const RngStream root(seed);
  std::vector<SuiteResult> out;
  out.push_back(verify_entropy_sandwich(quick ? 50 : 1000, quick ? 10000 : 100000, root.split(1)));
  out.push_back(verify_milb_certificate(quick ? 20 : 200, quick ? 10000 : 100000, root.split(2)));
  out.push_back(verify_gradients(quick ? 3 : 10, root.split(3)));
  out.push_back(verify_closed_forms());
  out.push_back(verify_selection_limits(quick ? 20 : 100, root.split(4)));
  out.push_back(verify_variance_demo(root.split(5)));
  return out;
}

}  // namespace milb
