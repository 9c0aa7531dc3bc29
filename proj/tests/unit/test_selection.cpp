#include <algorithm>
#include <cmath>
#include <set>

#include "doctest.h"
#include "milb/selection.hpp"
#include "milb/verify.hpp"

using namespace milb;

namespace {

BatchRequest request(std::size_t k, std::vector<std::size_t> excl = {}) {
  BatchRequest r;
  r.k = k;
  r.exclusions = std::move(excl);
  return r;
}

std::vector<std::size_t> sorted(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST_CASE("strategy names") {
  CHECK(parse_strategy("topk") == Strategy::topk);
  CHECK(parse_strategy("sbal") == Strategy::sbal);
  CHECK(parse_strategy("maxdist") == Strategy::maxdist);
  CHECK(to_string(Strategy::maxdist) == "maxdist");
  CHECK_THROWS_AS(parse_strategy("greedy"), std::invalid_argument);
}

TEST_CASE("request validation") {
  CHECK_THROWS(request(0).validate(5));
  CHECK_THROWS(request(5, {1}).validate(5));
  CHECK_THROWS(request(1, {7}).validate(5));
  CHECK_THROWS(request(1, {2, 2}).validate(5));
  auto r = request(2);
  r.temperature = 0.0;
  CHECK_THROWS(r.validate(5));
  r.temperature = 1.0;
  r.weight = -1.0;
  CHECK_THROWS(r.validate(5));
  CHECK_NOTHROW(request(4, {0}).validate(5));
}

TEST_CASE("top-k") {
  const std::vector<double> s = {3, 1, 2};
  CHECK(sorted(select_topk(s, request(2))) == std::vector<std::size_t>{0, 2});
  const std::vector<double> flat = {1, 1, 1, 1};
  CHECK(sorted(select_topk(flat, request(2))) == std::vector<std::size_t>{0, 1});
  CHECK(sorted(select_topk(s, request(1, {0}))) == std::vector<std::size_t>{2});
  CHECK_THROWS(select_topk(s, request(3, {0})));
}

TEST_CASE("SBAL limits and softmax frequencies") {
  RngStream s(61);
  std::vector<double> scores(50);
  for (double& v : scores) v = std_normal(s);
  auto cold = request(5, {3, 9});
  cold.strategy = Strategy::sbal;
  cold.temperature = 1e-9;
  CHECK(sorted(select_sbal(scores, cold, s)) == sorted(select_topk(scores, cold)));

  // Large T: uniform over candidates (chi-square, 9 dof, 99.9% quantile 27.88).
  const std::vector<double> ten = {5, 4, 3, 2, 1, 0, -1, -2, -3, -4};
  auto hot = request(1);
  hot.temperature = 1e9;
  std::vector<int> counts(10, 0);
  const int trials = 10000;
  for (int t = 0; t < trials; ++t) ++counts[select_sbal(ten, hot, s).front()];
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - trials / 10.0) * (c - trials / 10.0) / (trials / 10.0);
  CHECK(chi2 < 27.88);

  const std::vector<double> two = {std::log(3.0), 0.0};
  auto unit = request(1);
  int zero = 0;
  for (int t = 0; t < trials; ++t) zero += select_sbal(two, unit, s).front() == 0;
  CHECK(std::abs(zero / static_cast<double>(trials) - 0.75) < 0.01);

  RngStream a(62), b(62);
  CHECK(select_sbal(scores, request(7), a) == select_sbal(scores, request(7), b));
}

TEST_CASE("MaxDist examples") {
  const std::vector<double> uniform_scores = {0.5, 0.5, 0.5};
  const Eigen::MatrixXd line = (Eigen::MatrixXd(3, 1) << 0.0, 1.0, 10.0).finished();
  auto r = request(1, {0});
  r.strategy = Strategy::maxdist;
  CHECK(select_maxdist(uniform_scores, line, r) == std::vector<std::size_t>{2});

  // Orthogonal equal-norm candidates with a labeled origin are equidistant at
  // every step, so a huge weight reproduces the score order.
  const std::size_t n = 8;
  Eigen::MatrixXd feats = Eigen::MatrixXd::Zero(n + 1, n);
  for (std::size_t i = 0; i < n; ++i) feats(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = 1.0;
  RngStream s(63);
  std::vector<double> scores(n + 1);
  for (double& v : scores) v = std_normal(s);
  auto big = request(4, {n});
  big.weight = 1e9;
  CHECK(sorted(select_maxdist(scores, feats, big)) == sorted(select_topk(scores, big)));
}

TEST_CASE("MaxDist is invariant to affine score rescaling") {
  RngStream s(64);
  for (int t = 0; t < 20; ++t) {
    std::vector<double> scores(60), scaled(60);
    Eigen::MatrixXd f(60, 3);
    for (std::size_t i = 0; i < 60; ++i) {
      scores[i] = std_normal(s);
      scaled[i] = 7.5 * scores[i] - 3.0;
    }
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = std_normal(s);
    auto r = request(10, {0, 5, 11});
    r.weight = 2.0;
    CHECK(select_maxdist(scores, f, r) == select_maxdist(scaled, f, r));
  }
}

TEST_CASE("no strategy returns excluded or duplicate indices") {
  RngStream s(65);
  for (int t = 0; t < 30; ++t) {
    std::vector<double> scores(40);
    for (double& v : scores) v = std_normal(s);
    Eigen::MatrixXd f(40, 2);
    for (Eigen::Index i = 0; i < f.size(); ++i) f.data()[i] = std_normal(s);
    for (Strategy st : {Strategy::topk, Strategy::sbal, Strategy::maxdist}) {
      auto r = request(12, {1, 2, 3, 30});
      r.strategy = st;
      const auto out = select_batch(scores, f, r, s);
      const std::set<std::size_t> uniq(out.begin(), out.end());
      CHECK(out.size() == 12);
      CHECK(uniq.size() == 12);
      for (std::size_t e : r.exclusions) CHECK(uniq.count(e) == 0);
    }
  }
}

TEST_CASE("selection limits suite") {
  CHECK(verify_selection_limits(100, RngStream(66)).failures == 0);
}
