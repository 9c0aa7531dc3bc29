#include "milb/harness.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "milb/acquisition.hpp"
#include "milb/parallel.hpp"

namespace milb {

namespace {

std::size_t n_chunks(std::size_t n, std::size_t chunk) { return (n + chunk - 1) / chunk; }

Eigen::MatrixXd gather_columns(const Eigen::MatrixXd& m, const std::vector<std::size_t>& idx) {
  Eigen::MatrixXd out(m.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t i = 0; i < idx.size(); ++i) out.col(static_cast<Eigen::Index>(i)) = m.col(static_cast<Eigen::Index>(idx[i]));
  return out;
}

double mean_probe_milb(const MdnEnsemble& ens, const Eigen::MatrixXd& probe) {
  const auto preds = predict_ensemble_batch(ens, probe);
  double total = 0.0;
  for (const auto& p : preds) total += milb(p);
  return total / static_cast<double>(preds.size());
}

// Batch chosen by BAIT or Core-Set, as pool indices.
std::vector<std::size_t> select_by_embedding(const ExperimentConfig& cfg, const MdnEnsemble& ens,
                                             const LabeledPool& pool, const std::vector<std::size_t>& candidates,
                                             const RngStream& stream) {
  const MdnParams& member = ens.members.front();
  const Eigen::MatrixXd cand_x = gather_columns(pool.pool_inputs(), candidates);
  const Eigen::MatrixXd lab_x = pool.labeled_inputs();
  std::vector<std::size_t> local;
  if (cfg.acquisition == "coreset") {
    local = select_coreset(backbone_features(member, cand_x).transpose(), backbone_features(member, lab_x).transpose(),
                           cfg.query_batch);
  } else {
    const FisherFactors factors[2] = {fisher_factors(member, cand_x, stream.split(1)),
                                      fisher_factors(member, lab_x, stream.split(2))};
    const auto emb = fisher_sketch(factors, cfg.bait_max_dim, stream.split(3));
    local = select_bait(emb[0], emb[1], cfg.query_batch);
  }
  std::vector<std::size_t> out;
  out.reserve(local.size());
  for (std::size_t i : local) out.push_back(candidates[i]);
  return out;
}

}  // namespace

double evaluate_nll(const MdnEnsemble& ens, const Eigen::MatrixXd& inputs, const Eigen::MatrixXd& targets,
                    std::size_t chunk_size) {
  const auto n = static_cast<std::size_t>(inputs.cols());
  if (n == 0 || targets.cols() != inputs.cols()) throw std::invalid_argument("evaluate_nll: need a nonempty, aligned test set");
  if (chunk_size == 0) throw std::invalid_argument("evaluate_nll: chunk_size must be positive");
  std::vector<double> partial(n_chunks(n, chunk_size), 0.0);
  parallel_for(partial.size(), [&](std::size_t c) {
    const std::size_t lo = c * chunk_size;
    const auto len = static_cast<Eigen::Index>(std::min(chunk_size, n - lo));
    const auto start = static_cast<Eigen::Index>(lo);
    const auto preds = predict_ensemble_batch(ens, inputs.middleCols(start, len));
    double acc = 0.0;
    for (Eigen::Index s = 0; s < len; ++s) {
      const auto y = targets.col(start + s);
      acc -= log_pdf(marginal_mixture(preds[static_cast<std::size_t>(s)]),
                     std::span<const double>(y.data(), static_cast<std::size_t>(y.size())));
    }
    partial[c] = acc;
  });
  double total = 0.0;
  for (double p : partial) total += p;
  return total / static_cast<double>(n);
}

std::vector<double> score_candidates(const std::string& acquisition, const MdnEnsemble& ens,
                                     const Eigen::MatrixXd& inputs, RngStream& stream, std::size_t chunk_size) {
  const auto n = static_cast<std::size_t>(inputs.cols());
  if (acquisition == "random") return score_random(n, stream).scores;
  if (acquisition != "variance" && acquisition != "milb")
    throw std::invalid_argument("score_candidates: '" + acquisition + "' produces no scalar score");
  if (chunk_size == 0) throw std::invalid_argument("score_candidates: chunk_size must be positive");
  const bool use_milb = acquisition == "milb";
  std::vector<double> scores(n);
  parallel_for(n_chunks(n, chunk_size), [&](std::size_t c) {
    const std::size_t lo = c * chunk_size;
    const std::size_t len = std::min(chunk_size, n - lo);
    const auto preds =
        predict_ensemble_batch(ens, inputs.middleCols(static_cast<Eigen::Index>(lo), static_cast<Eigen::Index>(len)));
    for (std::size_t s = 0; s < len; ++s) scores[lo + s] = use_milb ? milb(preds[s]) : epistemic_variance(preds[s]);
  });
  for (std::size_t i = 0; i < n; ++i)
    if (!std::isfinite(scores[i])) throw ExperimentError("score_candidates: non-finite score at candidate " + std::to_string(i));
  return scores;
}

RunRecord run_experiment(const ExperimentConfig& cfg, std::uint64_t seed, const ProgressFn& progress) {
  cfg.validate();
  const auto sim = make_simulator(cfg.benchmark);
  const MdnArch arch = cfg.arch(*sim);
  const RngStream master(seed);
  LabeledPool pool = make_pool(sim, cfg.pool_size, cfg.test_size, cfg.init_size, master);
  const Eigen::MatrixXd probe = sample_dataset(*sim, cfg.probe_size, master.split(6)).first;

  RunRecord record{config_hash(cfg), seed, cfg.benchmark, cfg.acquisition, cfg.strategy, {}};
  for (std::size_t round = 0; round <= cfg.rounds; ++round) {
    const auto started = std::chrono::steady_clock::now();
    RoundRecord rr;
    rr.round = round;
    rr.n_labeled = pool.labeled().size();

    MdnEnsemble ens;
    try {
      const Dataset data{pool.labeled_inputs(), pool.labeled_targets()};
      ens = train_ensemble(data, arch, cfg.train, cfg.n_ens, master.split(4).split(round));
    } catch (const TrainingError& e) {
      throw ExperimentError("round " + std::to_string(round) + ": " + e.what());
    }
    rr.test_nll = evaluate_nll(ens, pool.test_inputs(), pool.test_targets(), cfg.chunk_size);
    if (!std::isfinite(rr.test_nll)) throw ExperimentError("round " + std::to_string(round) + ": non-finite test NLL");
    rr.probe_milb = mean_probe_milb(ens, probe);

    if (round < cfg.rounds) {
      const RngStream acq = master.split(5).split(round);
      const std::vector<std::size_t> candidates = pool.unlabeled();
      if (cfg.acquisition == "bait" || cfg.acquisition == "coreset") {
        rr.acquired = select_by_embedding(cfg, ens, pool, candidates, acq);
      } else {
        RngStream score_stream = acq.split(0);
        const std::vector<double> cand_scores = score_candidates(
            cfg.acquisition, ens, gather_columns(pool.pool_inputs(), candidates), score_stream, cfg.chunk_size);
        std::vector<double> scores(pool.pool_size(), 0.0);
        for (std::size_t i = 0; i < candidates.size(); ++i) scores[candidates[i]] = cand_scores[i];
        BatchRequest req;
        req.k = cfg.query_batch;
        req.strategy = parse_strategy(cfg.strategy);
        req.temperature = cfg.sbal_temperature;
        req.weight = cfg.maxdist_weight;
        req.exclusions = pool.labeled();
        RngStream select_stream = acq.split(4);
        const Eigen::MatrixXd features =
            req.strategy == Strategy::maxdist ? Eigen::MatrixXd(pool.pool_inputs().transpose()) : Eigen::MatrixXd();
        rr.acquired = select_batch(scores, features, req, select_stream);
      }
      pool.label(rr.acquired);
    }
    rr.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    record.rounds.push_back(rr);
    if (progress) progress(record.rounds.back());
  }
  return record;
}

}  // namespace milb
