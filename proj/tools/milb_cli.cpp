#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "milb/acquisition.hpp"
#include "milb/harness.hpp"
#include "milb/verify.hpp"

namespace fs = std::filesystem;

namespace {

struct Overrides {
  std::string config_path;
  std::string benchmark;
  std::string acquisition;
  std::string strategy;
  std::optional<double> sbal_temp;
  std::optional<double> maxdist_w;
};

milb::ExperimentConfig resolve_config(const Overrides& o) {
  milb::ExperimentConfig cfg = o.config_path.empty() ? milb::default_config(o.benchmark.empty() ? "double_well" : o.benchmark)
                                                     : milb::load_config(o.config_path);
  if (!o.config_path.empty() && !o.benchmark.empty() && o.benchmark != cfg.benchmark)
    throw std::invalid_argument("--benchmark conflicts with the config file's benchmark '" + cfg.benchmark + "'");
  if (!o.acquisition.empty()) cfg.acquisition = o.acquisition;
  if (!o.strategy.empty()) cfg.strategy = o.strategy;
  if (o.sbal_temp) cfg.sbal_temperature = *o.sbal_temp;
  if (o.maxdist_w) cfg.maxdist_weight = *o.maxdist_w;
  cfg.validate();
  return cfg;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

void write_json(const fs::path& path, const nlohmann::json& doc) { write_text(path, doc.dump(2) + "\n"); }

void write_manifest(const fs::path& dir, const nlohmann::json& configs) {
  write_json(dir / "manifest.json", {{"version", milb::version_string()}, {"config", configs}});
}

std::string group_label(const milb::RunRecord& r) { return r.acquisition + "/" + r.strategy; }

void write_curves(const fs::path& path, const std::vector<milb::RunRecord>& records) {
  std::map<std::string, std::vector<milb::RunRecord>> groups;
  for (const auto& r : records) groups[group_label(r)].push_back(r);
  std::vector<std::pair<std::string, std::vector<milb::CurveRow>>> rows;
  for (const auto& [label, recs] : groups) rows.emplace_back(label, milb::aggregate(recs));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  milb::write_curves_csv(rows, out);
}

milb::RunRecord run_and_save(const milb::ExperimentConfig& cfg, std::uint64_t seed, const fs::path& dir) {
  const std::string hash = milb::config_hash(cfg);
  std::cerr << "run " << cfg.benchmark << " " << cfg.acquisition << "/" << cfg.strategy << " seed " << seed << " ["
            << hash << "]\n";
  const auto record = milb::run_experiment(cfg, seed, [](const milb::RoundRecord& r) {
    std::fprintf(stderr, "  round %3zu  n=%6zu  nll=%10.5f  probe_milb=%9.5f  %.1fs\n", r.round, r.n_labeled, r.test_nll,
                 r.probe_milb, r.elapsed_seconds);
  });
  const std::string stem = "run_" + hash + "_" + std::to_string(seed);
  write_json(dir / (stem + ".json"), milb::to_json(record));
  write_json(dir / (stem + ".timing.json"), milb::timing_json(record));
  return record;
}

int cmd_run(const Overrides& o, std::optional<std::uint64_t> seed, const fs::path& dir) {
  const auto cfg = resolve_config(o);
  fs::create_directories(dir);
  const auto record = run_and_save(cfg, seed.value_or(cfg.seeds.front()), dir);
  write_curves(dir / "curves.csv", {record});
  write_manifest(dir, milb::to_json(cfg));
  return 0;
}

int cmd_sweep(const Overrides& o, const std::vector<std::string>& acquisitions, const std::vector<std::uint64_t>& seeds,
              const fs::path& dir) {
  const auto base = resolve_config(o);
  fs::create_directories(dir);
  std::vector<milb::ExperimentConfig> grid;
  for (const auto& acq : acquisitions) {
    auto cfg = base;
    cfg.acquisition = acq;
    if (acq == "random" || acq == "bait" || acq == "coreset") cfg.strategy = "topk";
    if (!seeds.empty()) cfg.seeds = seeds;
    cfg.validate();
    grid.push_back(cfg);
  }
  std::vector<milb::RunRecord> records;
  auto configs = nlohmann::json::array();
  for (const auto& cfg : grid) {
    configs.push_back(milb::to_json(cfg));
    for (std::uint64_t s : cfg.seeds) records.push_back(run_and_save(cfg, s, dir));
  }
  write_curves(dir / "curves.csv", records);
  write_manifest(dir, configs);
  return 0;
}

int cmd_verify(std::uint64_t seed, bool quick) {
  bool ok = true;
  for (const auto& s : milb::run_verify(seed, quick)) {
    std::printf("%-22s %s  cases=%zu failures=%zu worst=%.3e\n", s.name.c_str(), s.passed() ? "PASS" : "FAIL", s.cases,
                s.failures, s.worst);
    ok = ok && s.passed();
  }
  return ok ? 0 : 1;
}

int cmd_bench(std::size_t n, std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  milb::RngStream stream(seed);
  std::vector<milb::EnsemblePrediction> preds;
  preds.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<milb::DiagGaussianMixture> members;
    for (int z = 0; z < 8; ++z) {
      Eigen::VectorXd w = Eigen::VectorXd::Constant(8, 1.0 / 8.0);
      Eigen::MatrixXd mu(8, 2), var(8, 2);
      for (Eigen::Index j = 0; j < mu.size(); ++j) {
        mu.data()[j] = milb::std_normal(stream);
        var.data()[j] = std::exp(0.5 * milb::std_normal(stream));
      }
      members.emplace_back(std::move(w), std::move(mu), std::move(var));
    }
    preds.emplace_back(std::move(members));
  }
  auto t0 = clock::now();
  const auto scores = milb::score_milb(preds);
  const double milb_s = std::chrono::duration<double>(clock::now() - t0).count();

  t0 = clock::now();
  const auto variances = milb::score_epistemic_variance(preds);
  const double var_s = std::chrono::duration<double>(clock::now() - t0).count();

  const auto mix = milb::marginal_mixture(preds.front());
  constexpr std::size_t n_mc = 100000;
  t0 = clock::now();
  const auto h = milb::entropy_mc(mix, n_mc, stream);
  const double mc_s = std::chrono::duration<double>(clock::now() - t0).count();

  std::printf("milb_score        %10.0f candidates/s  (n_ens=8 K=8 N=2, n=%zu, checksum %.6f)\n", n / milb_s, n,
              scores.scores.front());
  std::printf("variance_score    %10.0f candidates/s  (checksum %.6f)\n", n / var_s, variances.scores.front());
  std::printf("entropy_mc        %10.0f samples/s     (K=64 N=2, H=%.4f +- %.4f)\n", n_mc / mc_s, h.estimate, h.stderr_);
  return 0;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out_path) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    const fs::path p(in);
    if (fs::is_directory(p)) {
      for (const auto& entry : fs::directory_iterator(p)) {
        const auto name = entry.path().filename().string();
        if (name.starts_with("run_") && name.ends_with(".json") && !name.ends_with(".timing.json"))
          files.push_back(entry.path());
      }
    } else if (fs::exists(p)) {
      files.push_back(p);
    } else {
      throw std::runtime_error("file not found: " + in);
    }
  }
  if (files.empty()) throw std::runtime_error("report: no run records found");
  std::sort(files.begin(), files.end());
  std::vector<milb::RunRecord> records;
  for (const auto& f : files) {
    std::ifstream in(f);
    records.push_back(milb::record_from_json(nlohmann::json::parse(in)));
  }
  if (out_path.empty() || out_path == "-") {
    std::map<std::string, std::vector<milb::RunRecord>> groups;
    for (const auto& r : records) groups[group_label(r)].push_back(r);
    std::vector<std::pair<std::string, std::vector<milb::CurveRow>>> rows;
    for (const auto& [label, recs] : groups) rows.emplace_back(label, milb::aggregate(recs));
    milb::write_curves_csv(rows, std::cout);
  } else {
    write_curves(out_path, records);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Active learning with mutual-information lower bounds over MDN ensembles", "milb"};
  app.require_subcommand(1);
  app.set_version_flag("--version", milb::version_string());

  Overrides o;
  std::uint64_t seed_value = 0;
  std::string out_dir = "out";

  const auto add_experiment_flags = [&](CLI::App* sub) {
    sub->add_option("--config", o.config_path, "JSON experiment config");
    sub->add_option("--benchmark", o.benchmark, "Benchmark defaults when no config is given")
        ->check(CLI::IsMember({"multimodal", "double_well", "ternary"}));
    sub->add_option("--out", out_dir, "Output directory")->capture_default_str();
    sub->add_option("--strategy", o.strategy, "Batch strategy")->check(CLI::IsMember({"topk", "sbal", "maxdist"}));
    sub->add_option("--sbal-temp", o.sbal_temp, "SBAL temperature")->check(CLI::PositiveNumber);
    sub->add_option("--maxdist-w", o.maxdist_w, "MaxDist score weight")->check(CLI::NonNegativeNumber);
  };
  const std::vector<std::string> acq_names = {"random", "variance", "milb", "bait", "coreset"};

  auto* run = app.add_subcommand("run", "Run one experiment");
  add_experiment_flags(run);
  auto* run_seed = run->add_option("--seed", seed_value, "Seed (defaults to the config's first seed)");
  run->add_option("--acquisition", o.acquisition, "Acquisition function")->check(CLI::IsMember(acq_names));

  std::vector<std::string> sweep_acq = acq_names;
  std::vector<std::uint64_t> sweep_seeds;
  auto* sweep = app.add_subcommand("sweep", "Run every acquisition over every seed");
  add_experiment_flags(sweep);
  sweep->add_option("--acquisition", sweep_acq, "Acquisitions to sweep")
      ->delimiter(',')
      ->check(CLI::IsMember(acq_names))
      ->capture_default_str();
  sweep->add_option("--seed", sweep_seeds, "Seeds (defaults to the config's seed list)")->delimiter(',');

  bool quick = false;
  auto* verify = app.add_subcommand("verify", "Run the property suites");
  verify->add_option("--seed", seed_value, "Seed")->capture_default_str();
  verify->add_flag("--quick", quick, "Smaller suite sizes");

  std::size_t bench_n = 4096;
  auto* bench = app.add_subcommand("bench", "Time the scoring and entropy kernels");
  bench->add_option("--n", bench_n, "Candidates to score")->check(CLI::PositiveNumber)->capture_default_str();
  bench->add_option("--seed", seed_value, "Seed")->capture_default_str();

  std::vector<std::string> report_inputs;
  std::string report_out;
  auto* report = app.add_subcommand("report", "Aggregate run records into curves CSV");
  report->add_option("inputs", report_inputs, "Record files or directories")->required();
  report->add_option("--out", report_out, "CSV path (stdout when omitted)");

  std::string defaults_benchmark = "double_well";
  auto* defaults = app.add_subcommand("defaults", "Print the default config for a benchmark");
  defaults->add_option("benchmark", defaults_benchmark)->check(CLI::IsMember({"multimodal", "double_well", "ternary"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return e.get_exit_code() != 0 ? e.get_exit_code() : 2;
  }

  try {
    if (*run) return cmd_run(o, run_seed->count() ? std::optional(seed_value) : std::nullopt, out_dir);
    if (*sweep) return cmd_sweep(o, sweep_acq, sweep_seeds, out_dir);
    if (*verify) return cmd_verify(seed_value, quick);
    if (*bench) return cmd_bench(bench_n, seed_value);
    if (*report) return cmd_report(report_inputs, report_out);
    if (*defaults) {
      std::cout << milb::to_json(milb::default_config(defaults_benchmark)).dump(2) << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
