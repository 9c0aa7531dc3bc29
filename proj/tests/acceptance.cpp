// Acceptance checks. Usage: milb_acceptance [--cli PATH] [criterion ids...]
// With no ids, runs every criterion. Prints one PASS/FAIL line per criterion
// and exits nonzero if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <map>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "milb/acquisition.hpp"
#include "milb/harness.hpp"
#include "milb/verify.hpp"

using namespace milb;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool ok;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string cli_path;

Outcome entropy_sandwich() {
  const auto r = verify_entropy_sandwich(1000, 100000, RngStream(0).split(1));
  return {r.passed(), fmt("%zu/%zu violations, worst margin %.3e", r.failures, r.cases, r.worst)};
}

Outcome milb_certificate() {
  const auto r = verify_milb_certificate(200, 100000, RngStream(0).split(2));
  return {r.passed(), fmt("%zu/%zu violations, worst slack %.3e", r.failures, r.cases, r.worst)};
}

Outcome gradients() {
  const auto r = verify_gradients(10, RngStream(0).split(3));
  return {r.passed(), fmt("max relative error %.3e over %zu draws", r.worst, r.cases)};
}

Outcome closed_forms() {
  const Eigen::VectorXd one = Eigen::VectorXd::Ones(1);
  const auto g = DiagGaussianMixture::gaussian(Eigen::VectorXd::Zero(1), one);
  const double same = milb::milb(EnsemblePrediction({g, g}));
  const double apart = milb::milb(EnsemblePrediction({DiagGaussianMixture::gaussian(Eigen::VectorXd::Constant(1, -50.0), one),
                                                DiagGaussianMixture::gaussian(Eigen::VectorXd::Constant(1, 50.0), one)}));
  const double e1 = std::abs(same - 0.5 * std::log(2.0 / std::numbers::e));
  const double e2 = std::abs(apart - (std::log(2.0) + 0.5 * std::log(2.0 / std::numbers::e)));
  return {e1 <= 1e-9 && e2 <= 1e-6, fmt("identical %.9f (err %.1e), separated %.9f (err %.1e)", same, e1, apart, e2)};
}

Outcome multimodal_oracle() {
  const auto sim = make_simulator("multimodal");
  const auto [x, y] = sample_dataset(*sim, 2000, RngStream(0).split(2));
  const double nll = oracle_nll(*sim, x, y);
  return {nll >= 21.5 && nll <= 24.5, fmt("oracle NLL %.4f (band [21.5, 24.5])", nll)};
}

Outcome kramers() {
  const RngStream st(0);
  const double sigmas[] = {0.3, 0.5, 0.7, 1.0};
  double f[4];
  for (int i = 0; i < 4; ++i) f[i] = kramers_escape_fraction(sigmas[i], -0.5, 2000, st);
  const bool trapped = f[0] < 0.01;
  const bool both = f[2] >= 0.2 && 1.0 - f[2] >= 0.2;
  const bool monotone = f[0] <= f[1] && f[1] <= f[2] && f[2] <= f[3];
  return {trapped && both && monotone,
          fmt("escape fractions %.4f %.4f %.4f %.4f; trapped<1%%:%s both>=20%%:%s monotone:%s", f[0], f[1], f[2], f[3],
              trapped ? "yes" : "no", both ? "yes" : "no", monotone ? "yes" : "no")};
}

Outcome mixture_head() {
  const auto sim = make_simulator("double_well");
  const RngStream root(0);
  const auto train = sample_dataset(*sim, 20000, root.split(1));
  const auto test = sample_dataset(*sim, 2000, root.split(2));
  const Dataset data{train.first, train.second};
  const ExperimentConfig cfg = default_config("double_well");
  double nll[2];
  const std::size_t ks[2] = {1, 8};
  for (int i = 0; i < 2; ++i) {
    MdnArch arch = cfg.arch(*sim);
    arch.n_components = ks[i];
    const auto ens = train_ensemble(data, arch, cfg.train, 4, root.split(3));
    nll[i] = evaluate_nll(ens, test.first, test.second, cfg.chunk_size);
    std::fprintf(stderr, "  K=%zu test NLL %.4f\n", ks[i], nll[i]);
  }
  return {nll[1] <= nll[0] - 2.0, fmt("NLL(K=1) %.4f, NLL(K=8) %.4f, gap %.4f nats (need >= 2)", nll[0], nll[1], nll[0] - nll[1])};
}

Outcome acquisition_ordering() {
  ExperimentConfig cfg = default_config("double_well");
  cfg.pool_size = 10000;
  cfg.init_size = 100;
  cfg.rounds = 10;
  cfg.query_batch = 30;
  cfg.n_ens = 4;
  cfg.n_components = 8;
  cfg.seeds = {0, 1, 2};
  std::map<std::string, std::vector<double>> finals;
  for (const std::string acq : {"random", "milb"}) {
    cfg.acquisition = acq;
    for (std::uint64_t seed : cfg.seeds) {
      const auto rec = run_experiment(cfg, seed);
      finals[acq].push_back(rec.rounds.back().test_nll);
      std::fprintf(stderr, "  %s seed %llu: NLL %.4f -> %.4f\n", acq.c_str(), static_cast<unsigned long long>(seed),
                   rec.rounds.front().test_nll, rec.rounds.back().test_nll);
    }
  }
  bool every = true;
  double mr = 0, mm = 0;
  for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
    every = every && finals["milb"][i] < finals["random"][i];
    mr += finals["random"][i] / 3.0;
    mm += finals["milb"][i] / 3.0;
  }
  const double ratio = mr / mm;
  return {every && ratio >= 1.5,
          fmt("final NLL random [%.3f %.3f %.3f], milb [%.3f %.3f %.3f]; milb better on every seed:%s; ratio %.3f (need >= 1.5)",
              finals["random"][0], finals["random"][1], finals["random"][2], finals["milb"][0], finals["milb"][1],
              finals["milb"][2], every ? "yes" : "no", ratio)};
}

Outcome variance_demo() {
  RngStream s(0);
  const double delta = std::numbers::pi / 8.0;
  const auto r = variance_failure_demo(delta, 100000, s);
  const double target = std::log(2.0 * std::numbers::pi) - std::log(4.0 * delta);
  const bool ok = std::abs(r.trace_variance_circle - 1.0) <= 0.01 && std::abs(r.trace_variance_caps - 1.0) <= 0.01 &&
                  std::abs(r.entropy_gap_mc - target) <= 1e-3;
  return {ok, fmt("trace variance %.5f / %.5f, entropy gap %.6f (MC %.6f, histogram %.4f), target %.6f",
                  r.trace_variance_circle, r.trace_variance_caps, r.entropy_gap, r.entropy_gap_mc,
                  r.entropy_gap_histogram, target)};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  ExperimentConfig cfg = default_config("double_well");
  cfg.hidden = 16;
  cfg.depth = 2;
  cfg.n_ens = 2;
  cfg.pool_size = 500;
  cfg.test_size = 200;
  cfg.init_size = 30;
  cfg.rounds = 2;
  cfg.query_batch = 10;
  cfg.train.iter_cap = 100;
  cfg.seeds = {7};
  if (cli_path.empty()) {
    const auto a = to_json(run_experiment(cfg, 7)).dump(2), b = to_json(run_experiment(cfg, 7)).dump(2);
    return {a == b, fmt("library-level comparison of %zu-byte records", a.size())};
  }
  const fs::path root = fs::temp_directory_path() / "milb_acceptance_determinism";
  fs::remove_all(root);
  fs::create_directories(root);
  std::ofstream(root / "config.json") << to_json(cfg).dump(2);
  std::string files[2];
  for (int i = 0; i < 2; ++i) {
    const fs::path out = root / ("out" + std::to_string(i));
    const std::string cmd = "\"" + cli_path + "\" run --config \"" + (root / "config.json").string() + "\" --seed 7 --out \"" +
                            out.string() + "\" 2>/dev/null";
    if (std::system(cmd.c_str()) != 0) return {false, "milb run exited nonzero"};
    files[i] = slurp(out / ("run_" + config_hash(cfg) + "_7.json"));
  }
  fs::remove_all(root);
  return {!files[0].empty() && files[0] == files[1], fmt("two CLI runs, %zu-byte records identical", files[0].size())};
}

Outcome selection_limits() {
  const auto r = verify_selection_limits(100, RngStream(0).split(4));
  return {r.passed(), fmt("%zu/%zu instances differ (100 SBAL, 100 MaxDist)", r.failures, r.cases)};
}

struct Criterion {
  int id;
  const char* name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--cli" && i + 1 < argc) {
      cli_path = argv[++i];
    } else {
      wanted.push_back(std::stoi(a));
    }
  }
  const std::vector<Criterion> all = {
      {1, "entropy sandwich", 120, entropy_sandwich},
      {2, "MI-LB certificate", 300, milb_certificate},
      {3, "gradient correctness", 60, gradients},
      {4, "closed-form MI-LB values", 1, closed_forms},
      {5, "multimodal oracle NLL", 60, multimodal_oracle},
      {6, "Kramers phase transition", 120, kramers},
      {7, "mixture-head necessity", 45 * 60, mixture_head},
      {8, "acquisition ordering at desk scale", 3 * 3600, acquisition_ordering},
      {9, "variance-failure demo", 10, variance_demo},
      {10, "determinism", 600, determinism},
      {11, "selection-strategy limits", 60, selection_limits},
  };
  bool ok = true;
  for (const auto& c : all) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.ok && in_time;
    std::printf("%s criterion %d (%s): %s [%.1fs, budget %.0fs%s]\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(),
                secs, c.budget_s, in_time ? "" : ", OVER BUDGET");
    std::fflush(stdout);
    ok = ok && pass;
  }
  return ok ? 0 : 1;
}
