#include <cmath>
#include <set>

#include "doctest.h"
#include "milb/benchmarks.hpp"

using namespace milb;

namespace {

std::span<const double> view(const Eigen::VectorXd& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

bool valid_mixture(const DiagGaussianMixture& m) {
  return std::abs(m.weights().sum() - 1.0) < 1e-9 && m.weights().minCoeff() >= 0.0 && m.variances().minCoeff() > 0.0 &&
         m.means().allFinite();
}

}  // namespace

TEST_CASE("multimodal inputs lie on the fixed tanh manifold") {
  const MultimodalSystem sys, twin;
  RngStream s(71);
  for (int i = 0; i < 1000; ++i) {
    const auto x = sys.sample_input(s);
    REQUIRE(x.size() == 10);
    CHECK(x.cwiseAbs().maxCoeff() < 1.0);
  }
  const Eigen::VectorXd origin = sys.embed(Eigen::VectorXd::Zero(4));
  CHECK(origin == twin.embed(Eigen::VectorXd::Zero(4)));
  CHECK(origin.cwiseAbs().maxCoeff() < 1.0);
}

TEST_CASE("multimodal oracle: centred means, valid mixtures, gate limit") {
  const MultimodalSystem sys;
  RngStream s(72);
  for (int i = 0; i < 10000; ++i) {
    const auto x = sys.sample_input(s);
    const auto m = sys.oracle_mixture(view(x));
    REQUIRE(valid_mixture(m));
    REQUIRE(m.n_components() == 3);
    REQUIRE(m.dim() == 16);
    if (i < 200) CHECK(m.mean().cwiseAbs().maxCoeff() < 1e-9);
  }
  // Radius zero: gate closed, logits (scale, 0, 0).
  const Eigen::VectorXd x = Eigen::VectorXd::Zero(10);
  const auto w = sys.mixing_weights(view(x));
  const double expected = std::exp(3.0) / (std::exp(3.0) + 2.0);
  CHECK(w[0] == doctest::Approx(expected).epsilon(1e-4));

  const auto m = sys.oracle_mixture(view(x));
  const Eigen::VectorXd mode = m.means().row(0).transpose();
  CHECK(std::abs(oracle_nll(sys, x, mode) + log_pdf(m, mode)) < 1e-12);
}

TEST_CASE("double-well geometry, priors and fixed point") {
  const DoubleWellSystem sys;
  CHECK(sys.n_steps() == 1000);
  CHECK(sys.snapshot_steps() == std::vector<std::size_t>{250, 500, 750, 1000});
  CHECK(sys.input_dim() == 7);
  CHECK(sys.output_dim() == 20);
  RngStream s(73);
  for (int i = 0; i < 1000; ++i) {
    const auto x = sys.sample_input(s);
    for (int p = 0; p < 5; ++p) REQUIRE((x[p] >= -1.5 && x[p] < 1.5));
    REQUIRE((x[5] >= 0.3 && x[5] < 2.0));
    REQUIRE((x[6] >= 0.0 && x[6] < 3.0));
  }
  Eigen::VectorXd x(7);
  x << 1, 1, 1, 1, 1, kVarFloor, 0.0;
  const auto y = sys.simulate(view(x), s);
  CHECK(y.size() == 20);
  CHECK((y.array() - 1.0).abs().maxCoeff() < 1e-3);

  x(5) = 0.0;
  CHECK_THROWS(sys.simulate(view(x), s));
}

TEST_CASE("double-well energy decreases without noise or coupling") {
  const DoubleWellSystem sys;
  RngStream s(74);
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd x(7);
    for (int p = 0; p < 5; ++p) x[p] = uniform(s, -1.5, 1.5);
    x[5] = kVarFloor;
    x[6] = 0.0;
    const auto y = sys.simulate(view(x), s);
    for (int p = 0; p < 5; ++p) CHECK(sys.potential(y[15 + p]) <= sys.potential(x[p]) + 1e-6);
  }
}

TEST_CASE("kramers escape is rare at low noise and grows with sigma") {
  const RngStream st(75);
  const double low = kramers_escape_fraction(0.3, -0.5, 400, st);
  const double high = kramers_escape_fraction(1.0, -0.5, 400, st);
  CHECK(low < 0.1);
  CHECK(high > 0.3);
  CHECK(low <= high);
}

TEST_CASE("ternary inputs, softmin limit and composition-only weights") {
  const TernarySystem sys;
  RngStream s(76);
  double mean_a = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const auto x = sys.sample_input(s);
    REQUIRE(x[0] + x[1] <= 1.0 + 1e-15);
    for (int p = 2; p < 8; ++p) REQUIRE((x[p] >= -1.0 && x[p] < 1.0));
    mean_a += x[0] / n;
  }
  CHECK(std::abs(mean_a - 1.0 / 3.0) < 0.005);

  for (int i = 0; i < 10000; ++i) REQUIRE(valid_mixture(sys.oracle_mixture(view(sys.sample_input(s)))));

  Eigen::VectorXd x = sys.sample_input(s), y = x;
  for (int p = 2; p < 8; ++p) y[p] = -x[p];
  CHECK(sys.oracle_mixture(view(x)).weights() == sys.oracle_mixture(view(y)).weights());

  TernaryParams cold;
  cold.tau = 1e-6;
  const TernarySystem sharp(cold);
  const Eigen::Vector3d x3(x[0], x[1], 1.0 - x[0] - x[1]);
  std::size_t best = 0;
  for (std::size_t ph = 1; ph < 4; ++ph)
    if (sharp.free_energy(ph, x3) < sharp.free_energy(best, x3)) best = ph;
  const auto w = sharp.phase_posterior(x3);
  CHECK(w[static_cast<Eigen::Index>(best)] == doctest::Approx(1.0).epsilon(1e-9));

  const double frac = sys.boundary_fraction(0.7);
  MESSAGE("ternary boundary fraction (max posterior < 0.7): " << frac);
  CHECK((frac >= 0.0 && frac <= 1.0));
}

TEST_CASE("oracle density beats a misspecified model (Gibbs)") {
  const TernarySystem sys;
  const auto [x, y] = sample_dataset(sys, 4000, RngStream(77));
  double gap = 0.0, sq = 0.0;
  const auto n = static_cast<double>(x.cols());
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    const Eigen::VectorXd xi = x.col(i), yi = y.col(i);
    const auto m = sys.oracle_mixture(view(xi));
    const DiagGaussianMixture flat(Eigen::VectorXd::Constant(m.weights().size(), 1.0 / static_cast<double>(m.weights().size())),
                                   m.means(), m.variances());
    const double d = log_pdf(m, yi) - log_pdf(flat, yi);
    gap += d / n;
    sq += d * d / n;
  }
  CHECK(gap >= -3.0 * std::sqrt((sq - gap * gap) / n));
}

TEST_CASE("pools are disjoint, reproducible and lazily labeled") {
  const auto sim = make_simulator("double_well");
  const RngStream master(78);
  LabeledPool a = make_pool(sim, 200, 50, 10, master);
  LabeledPool b = make_pool(sim, 200, 50, 10, master);
  CHECK(a.pool_inputs() == b.pool_inputs());
  CHECK(a.test_targets() == b.test_targets());
  CHECK(a.labeled_targets() == b.labeled_targets());
  CHECK(a.labeled().size() == 10);
  const auto un = a.unlabeled();
  CHECK(un.size() == 190);
  const std::set<std::size_t> lab(a.labeled().begin(), a.labeled().end());
  for (std::size_t i : un) CHECK(lab.count(i) == 0);

  const std::vector<std::size_t> more = {150, 20};
  a.label(more);
  CHECK(a.is_labeled(150));
  CHECK(a.labeled_inputs().col(11) == a.pool_inputs().col(20));
  CHECK_THROWS(a.label(more));
  const std::vector<std::size_t> oob = {999};
  CHECK_THROWS(a.label(oob));
  CHECK_THROWS(make_simulator("lorenz"));
  CHECK_THROWS(oracle_nll(*sim, a.test_inputs(), a.test_targets()));
}
