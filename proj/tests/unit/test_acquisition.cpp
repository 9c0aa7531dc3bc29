#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "milb/acquisition.hpp"
#include "milb/selection.hpp"
#include "milb/verify.hpp"

using namespace milb;

namespace {

DiagGaussianMixture gauss1(double mean, double var = 1.0) {
  return DiagGaussianMixture::gaussian(Eigen::VectorXd::Constant(1, mean), Eigen::VectorXd::Constant(1, var));
}

Eigen::MatrixXd random_matrix(RngStream& s, Eigen::Index r, Eigen::Index c) {
  Eigen::MatrixXd m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = std_normal(s);
  return m;
}

// Largest distance from any point to its nearest centre (labeled rows plus chosen rows).
double cover_radius(const Eigen::MatrixXd& pts, const Eigen::MatrixXd& labeled, const std::vector<std::size_t>& chosen) {
  double r = 0.0;
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    double d = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < labeled.rows(); ++j) d = std::min(d, (pts.row(i) - labeled.row(j)).norm());
    for (std::size_t c : chosen) d = std::min(d, (pts.row(i) - pts.row(static_cast<Eigen::Index>(c))).norm());
    r = std::max(r, d);
  }
  return r;
}

}  // namespace

TEST_CASE("random scores") {
  RngStream a(41), b(41);
  const auto s1 = score_random(1000, a), s2 = score_random(1000, b);
  CHECK(s1.scores == s2.scores);
  CHECK(s1.kind == "random");
  for (double v : s1.scores) {
    REQUIRE(v >= 0.0);
    REQUIRE(v < 1.0);
  }
  RngStream c(42);
  const auto s3 = score_random(1000, c);
  BatchRequest req;
  req.k = 10;
  auto t1 = select_topk(s1.scores, req), t3 = select_topk(s3.scores, req);
  std::sort(t1.begin(), t1.end());
  std::sort(t3.begin(), t3.end());
  CHECK(t1 != t3);
}

TEST_CASE("epistemic variance") {
  const auto g = gauss1(0.3);
  CHECK(epistemic_variance(EnsemblePrediction({g, g, g})) == 0.0);
  CHECK(epistemic_variance(EnsemblePrediction({gauss1(-1.0), gauss1(1.0)})) == doctest::Approx(1.0));
  RngStream s(43);
  const auto e = random_ensemble(s, 4, 3, 3);
  auto members = e.member_mixtures;
  std::reverse(members.begin(), members.end());
  CHECK(epistemic_variance(EnsemblePrediction(members)) == doctest::Approx(epistemic_variance(EnsemblePrediction(e.member_mixtures))));
}

TEST_CASE("MI-LB closed forms") {
  const auto g = gauss1(0.0);
  CHECK(std::abs(milb::milb(EnsemblePrediction({g, g})) - 0.5 * std::log(2.0 / std::numbers::e)) < 1e-9);
  CHECK(std::abs(milb::milb(EnsemblePrediction({g, g})) - (-0.153426)) < 1e-6);
  const double sep = milb::milb(EnsemblePrediction({gauss1(-50.0), gauss1(50.0)}));
  CHECK(std::abs(sep - (std::log(2.0) + 0.5 * std::log(2.0 / std::numbers::e))) < 1e-6);
  CHECK(std::abs(sep - 0.539721) < 1e-6);
  CHECK(verify_closed_forms().passed());
}

TEST_CASE("MI-LB boxed and explicit forms agree; identical members give a nonpositive score") {
  RngStream s(44);
  for (int t = 0; t < 200; ++t) {
    const auto e = random_ensemble(s, 4, 4, 4);
    const double boxed = milb::milb(e);
    CHECK(std::abs(boxed - milb_explicit(e)) <= 1e-10 * std::max(1.0, std::abs(boxed)));
    const EnsemblePrediction same({e.member_mixtures.front(), e.member_mixtures.front()});
    CHECK(milb::milb(same) <= 0.0);
    CHECK(epistemic_variance(same) == 0.0);
  }
}

TEST_CASE("MI-LB certificate and MC mutual information sanity") {
  const auto r = verify_milb_certificate(40, 20000, RngStream(45));
  CHECK(r.failures == 0);
  RngStream s(46);
  for (int t = 0; t < 20; ++t) {
    const auto e = random_ensemble(s, 3, 3, 2);
    const auto mi = mutual_information_mc(e, 20000, s);
    CHECK(mi.estimate >= -3.0 * mi.stderr_);
  }
}

TEST_CASE("score vectors are permutation-equivariant and dump to CSV") {
  RngStream s(47);
  std::vector<EnsemblePrediction> preds;
  for (int i = 0; i < 6; ++i) preds.push_back(random_ensemble(s, 3, 2, 2));
  std::vector<EnsemblePrediction> rev(preds.rbegin(), preds.rend());
  const auto a = score_milb(preds), b = score_milb(rev);
  const auto va = score_epistemic_variance(preds), vb = score_epistemic_variance(rev);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    CHECK(a.scores[i] == b.scores[preds.size() - 1 - i]);
    CHECK(va.scores[i] == vb.scores[preds.size() - 1 - i]);
  }
  std::ostringstream out;
  write_scores_csv(a, out);
  const std::string csv = out.str();
  CHECK(csv.rfind("candidate_index,score\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
}

TEST_CASE("fisher embedding: K = 1 closed form") {
  MdnArch arch;
  arch.input_dim = 2;
  arch.output_dim = 2;
  arch.hidden = 5;
  arch.depth = 1;
  arch.n_components = 1;
  RngStream s(48);
  const MdnParams p = init_mdn(arch, s);
  const Eigen::Vector2d x(0.4, -1.2);
  const RngStream st(49);
  const auto row = fisher_embed(p, std::span<const double>(x.data(), x.size()), st);
  const auto mix = forward(p, x);
  RngStream draw = st.split(0);
  const Eigen::VectorXd y = sample(mix, draw);
  const Eigen::MatrixXd z = backbone_features(p, x);
  for (Eigen::Index d = 0; d < 2; ++d)
    for (Eigen::Index h = 0; h < 5; ++h)
      CHECK(row[d * 5 + h] == doctest::Approx((y[d] - mix.means()(0, d)) / mix.variances()(0, d) * z(h, 0)).epsilon(1e-12));
}

TEST_CASE("fisher embedding equals the finite-difference gradient of the log-likelihood") {
  MdnArch arch;
  arch.input_dim = 3;
  arch.output_dim = 2;
  arch.hidden = 4;
  arch.depth = 2;
  arch.n_components = 3;
  RngStream s(50);
  MdnParams p = init_mdn(arch, s);
  for (Eigen::Index i = 0; i < p.head_bias().size(); ++i) p.head_bias()[i] = 0.5 * std_normal(s);
  const Eigen::Vector3d x(0.2, -0.7, 1.1);
  const RngStream st(51);
  const auto row = fisher_embed(p, std::span<const double>(x.data(), x.size()), st);
  RngStream draw = st.split(0);
  const Eigen::VectorXd y = sample(forward(p, x), draw);
  constexpr double h = 1e-5;
  double worst = 0.0;
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t d = 0; d < 2; ++d)
      for (std::size_t j = 0; j < 4; ++j) {
        MdnParams plus = p, minus = p;
        const auto r = static_cast<Eigen::Index>(p.mean_row(k, d));
        plus.head_weight()(r, static_cast<Eigen::Index>(j)) += h;
        minus.head_weight()(r, static_cast<Eigen::Index>(j)) -= h;
        const double fd = (log_pdf(forward(plus, x), y) - log_pdf(forward(minus, x), y)) / (2 * h);
        const double g = row[static_cast<Eigen::Index>((k * 2 + d) * 4 + j)];
        worst = std::max(worst, std::abs(g - fd) / std::max({std::abs(g), std::abs(fd), 1e-6}));
      }
  CHECK(worst < 1e-4);
}

TEST_CASE("fisher sketch is exact below the cap and reduces dimension above it") {
  RngStream s(52);
  FisherFactors f{random_matrix(s, 7, 6), random_matrix(s, 7, 5)};
  const FisherFactors sets[1] = {f};
  const auto exact = fisher_sketch(sets, 1024, RngStream(53));
  CHECK(exact.front() == f.embeddings());
  const auto small = fisher_sketch(sets, 12, RngStream(53));
  CHECK(small.front().rows() == 7);
  CHECK(static_cast<std::size_t>(small.front().cols()) <= 12);
  const auto again = fisher_sketch(sets, 12, RngStream(53));
  CHECK(small.front() == again.front());
}

TEST_CASE("BAIT: whole pool, ties, and errors") {
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(3, 3);
  const Eigen::MatrixXd none(0, 3);
  CHECK(select_bait(eye, none, 3) == std::vector<std::size_t>{0, 1, 2});
  CHECK(select_bait(eye, none, 2) == std::vector<std::size_t>{0, 1});
  CHECK_THROWS(select_bait(eye, none, 4));
  CHECK_THROWS(select_bait(eye, none, 0));
  CHECK_THROWS(select_bait(eye, Eigen::MatrixXd::Identity(2, 2), 1));
}

TEST_CASE("BAIT greedy is within 1.25x of the exhaustive optimum") {
  RngStream s(54);
  double worst_ratio = 0.0;
  for (int t = 0; t < 20; ++t) {
    const Eigen::MatrixXd cand = random_matrix(s, 12, 4);
    const Eigen::MatrixXd lab = random_matrix(s, 3, 4);
    const auto picked = select_bait(cand, lab, 3);
    REQUIRE(picked.size() == 3);
    const double greedy = bait_objective(cand, lab, picked, kBaitRidge);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < 12; ++a)
      for (std::size_t b = a + 1; b < 12; ++b)
        for (std::size_t c = b + 1; c < 12; ++c) {
          const std::size_t idx[3] = {a, b, c};
          best = std::min(best, bait_objective(cand, lab, idx, kBaitRidge));
        }
    worst_ratio = std::max(worst_ratio, greedy / best);
  }
  MESSAGE("worst greedy/optimal BAIT ratio " << worst_ratio);
  CHECK(worst_ratio <= 1.25);
}

TEST_CASE("core-set: farthest point, max-min order, 2-approximation") {
  const Eigen::MatrixXd pts = (Eigen::MatrixXd(3, 1) << 0.0, 1.0, 10.0).finished();
  const Eigen::MatrixXd lab0 = (Eigen::MatrixXd(1, 1) << 0.0).finished();
  CHECK(select_coreset(pts, lab0, 1) == std::vector<std::size_t>{2});
  CHECK(select_coreset(pts, lab0, 3) == std::vector<std::size_t>{2, 1, 0});

  RngStream s(55);
  for (int t = 0; t < 10; ++t) {
    const Eigen::MatrixXd p = random_matrix(s, 20, 2);
    const Eigen::MatrixXd lab = random_matrix(s, 2, 2);
    const auto greedy = select_coreset(p, lab, 3);
    double opt = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < 20; ++a)
      for (std::size_t b = a + 1; b < 20; ++b)
        for (std::size_t c = b + 1; c < 20; ++c) opt = std::min(opt, cover_radius(p, lab, {a, b, c}));
    CHECK(cover_radius(p, lab, greedy) <= 2.0 * opt + 1e-12);
  }
}

TEST_CASE("variance-failure demo") {
  RngStream s(56);
  const auto r = variance_failure_demo(std::numbers::pi / 8.0, 100000, s);
  CHECK(std::abs(r.trace_variance_circle - 1.0) <= 0.01);
  CHECK(std::abs(r.trace_variance_caps - 1.0) <= 0.01);
  CHECK(r.entropy_gap == doctest::Approx(std::log(4.0)).epsilon(1e-14));
  CHECK(std::abs(r.entropy_gap_mc - (std::log(2 * std::numbers::pi) - std::log(std::numbers::pi / 2))) < 1e-3);
  CHECK(std::abs(r.entropy_gap_histogram - std::log(4.0)) < 0.05);
  CHECK(r.passed);
}
