#include <cstdio>
#include <fstream>
#include <set>
#include <stdexcept>

#include "milb/harness.hpp"

namespace milb {

namespace {

const std::set<std::string> kAcquisitions = {"random", "variance", "milb", "bait", "coreset"};
const std::set<std::string> kStrategies = {"topk", "sbal", "maxdist"};

nlohmann::json train_to_json(const TrainConfig& t) {
  return {{"peak_lr", t.peak_lr},         {"weight_decay", t.weight_decay},     {"warmup_cap", t.warmup_cap},
          {"decay_rate", t.decay_rate},   {"decay_steps", t.decay_steps},       {"clip_threshold", t.clip_threshold},
          {"batch_size", t.batch_size},   {"iter_cap", t.iter_cap},             {"iter_per_sample", t.iter_per_sample},
          {"min_iter", t.min_iter}};
}

template <class T>
void take(const nlohmann::json& doc, const char* key, T& field, std::set<std::string>& seen) {
  if (!doc.contains(key)) return;
  seen.insert(key);
  try {
    field = doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config: bad value for '") + key + "': " + e.what());
  }
}

void reject_unknown(const nlohmann::json& doc, const std::set<std::string>& seen, const std::string& where) {
  for (const auto& item : doc.items())
    if (!seen.count(item.key())) throw std::invalid_argument("config: unknown key '" + where + item.key() + "'");
}

}  // namespace

void ExperimentConfig::validate() const {
  make_simulator(benchmark);  // throws on an unknown id
  if (!kAcquisitions.count(acquisition))
    throw std::invalid_argument("config: unknown acquisition '" + acquisition + "'");
  if (!kStrategies.count(strategy)) throw std::invalid_argument("config: unknown strategy '" + strategy + "'");
  if (acquisition == "random" && strategy != "topk")
    throw std::invalid_argument("config: random acquisition only combines with topk");
  if ((acquisition == "bait" || acquisition == "coreset") && strategy != "topk")
    throw std::invalid_argument("config: " + acquisition + " selects its own batch and requires strategy topk");
  if (hidden == 0 || depth == 0 || n_components == 0 || n_ens == 0)
    throw std::invalid_argument("config: model dimensions must be positive");
  if (pool_size == 0 || test_size == 0 || init_size == 0 || query_batch == 0 || chunk_size == 0 || probe_size == 0 ||
      bait_max_dim == 0)
    throw std::invalid_argument("config: sizes must be positive");
  if (init_size + rounds * query_batch > pool_size)
    throw std::invalid_argument("config: init_size + rounds * query_batch exceeds pool_size");
  if (!(sbal_temperature > 0.0)) throw std::invalid_argument("config: sbal_temperature must be positive");
  if (!(maxdist_weight >= 0.0)) throw std::invalid_argument("config: maxdist_weight must be nonnegative");
  if (seeds.empty()) throw std::invalid_argument("config: seeds must be nonempty");
  train.validate();
}

MdnArch ExperimentConfig::arch(const Simulator& sim) const {
  MdnArch a;
  a.input_dim = sim.input_dim();
  a.output_dim = sim.output_dim();
  a.hidden = hidden;
  a.depth = depth;
  a.n_components = n_components;
  return a;
}

ExperimentConfig default_config(const std::string& benchmark) {
  ExperimentConfig cfg;
  cfg.benchmark = benchmark;
  if (benchmark == "multimodal") {
    cfg.depth = 2;
    cfg.n_components = 5;
  } else if (benchmark == "double_well") {
    cfg.depth = 3;
    cfg.n_components = 8;
  } else if (benchmark == "ternary") {
    cfg.hidden = 64;
    cfg.depth = 2;
    cfg.n_components = 4;
    cfg.train.peak_lr = 2e-4;
    cfg.train.weight_decay = 5e-2;
    cfg.train.batch_size = 64;
    cfg.train.iter_cap = 40000;
    cfg.train.iter_per_sample = 200;
    cfg.train.min_iter = 2000;
    cfg.rounds = 30;
    cfg.query_batch = 15;
  } else {
    throw std::invalid_argument("unknown benchmark '" + benchmark + "' (expected multimodal|double_well|ternary)");
  }
  return cfg;
}

nlohmann::json to_json(const ExperimentConfig& cfg) {
  return {{"benchmark", cfg.benchmark},
          {"hidden", cfg.hidden},
          {"depth", cfg.depth},
          {"n_components", cfg.n_components},
          {"n_ens", cfg.n_ens},
          {"train", train_to_json(cfg.train)},
          {"pool_size", cfg.pool_size},
          {"test_size", cfg.test_size},
          {"init_size", cfg.init_size},
          {"rounds", cfg.rounds},
          {"query_batch", cfg.query_batch},
          {"acquisition", cfg.acquisition},
          {"strategy", cfg.strategy},
          {"sbal_temperature", cfg.sbal_temperature},
          {"maxdist_weight", cfg.maxdist_weight},
          {"seeds", cfg.seeds},
          {"chunk_size", cfg.chunk_size},
          {"probe_size", cfg.probe_size},
          {"bait_max_dim", cfg.bait_max_dim}};
}

ExperimentConfig config_from_json(const nlohmann::json& doc) {
  if (!doc.is_object()) throw std::invalid_argument("config: top level must be an object");
  ExperimentConfig cfg = default_config(doc.value("benchmark", std::string("double_well")));
  std::set<std::string> seen;
  take(doc, "benchmark", cfg.benchmark, seen);
  take(doc, "hidden", cfg.hidden, seen);
  take(doc, "depth", cfg.depth, seen);
  take(doc, "n_components", cfg.n_components, seen);
  take(doc, "n_ens", cfg.n_ens, seen);
  take(doc, "pool_size", cfg.pool_size, seen);
  take(doc, "test_size", cfg.test_size, seen);
  take(doc, "init_size", cfg.init_size, seen);
  take(doc, "rounds", cfg.rounds, seen);
  take(doc, "query_batch", cfg.query_batch, seen);
  take(doc, "acquisition", cfg.acquisition, seen);
  take(doc, "strategy", cfg.strategy, seen);
  take(doc, "sbal_temperature", cfg.sbal_temperature, seen);
  take(doc, "maxdist_weight", cfg.maxdist_weight, seen);
  take(doc, "seeds", cfg.seeds, seen);
  take(doc, "chunk_size", cfg.chunk_size, seen);
  take(doc, "probe_size", cfg.probe_size, seen);
  take(doc, "bait_max_dim", cfg.bait_max_dim, seen);
  if (doc.contains("train")) {
    seen.insert("train");
    const auto& t = doc.at("train");
    std::set<std::string> seen_train;
    take(t, "peak_lr", cfg.train.peak_lr, seen_train);
    take(t, "weight_decay", cfg.train.weight_decay, seen_train);
    take(t, "warmup_cap", cfg.train.warmup_cap, seen_train);
    take(t, "decay_rate", cfg.train.decay_rate, seen_train);
    take(t, "decay_steps", cfg.train.decay_steps, seen_train);
    take(t, "clip_threshold", cfg.train.clip_threshold, seen_train);
    take(t, "batch_size", cfg.train.batch_size, seen_train);
    take(t, "iter_cap", cfg.train.iter_cap, seen_train);
    take(t, "iter_per_sample", cfg.train.iter_per_sample, seen_train);
    take(t, "min_iter", cfg.train.min_iter, seen_train);
    reject_unknown(t, seen_train, "train.");
  }
  reject_unknown(doc, seen, "");
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("config file not found: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument("config: " + path + " is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

std::string config_hash(const ExperimentConfig& cfg) {
  nlohmann::json doc = to_json(cfg);
  doc.erase("seeds");
  const std::string text = doc.dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string version_string() {
#ifdef MILB_GIT_DESCRIBE
  return MILB_GIT_DESCRIBE;
#else
  return MILB_VERSION;
#endif
}

}  // namespace milb
