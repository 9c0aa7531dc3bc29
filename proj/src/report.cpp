#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include "milb/harness.hpp"

namespace milb {

nlohmann::json to_json(const RunRecord& record) {
  auto rounds = nlohmann::json::array();
  for (const auto& r : record.rounds)
    rounds.push_back({{"round", r.round},
                      {"n_labeled", r.n_labeled},
                      {"test_nll", r.test_nll},
                      {"probe_milb", r.probe_milb},
                      {"acquired", r.acquired}});
  return {{"config_hash", record.config_hash}, {"seed", record.seed},         {"benchmark", record.benchmark},
          {"acquisition", record.acquisition}, {"strategy", record.strategy}, {"rounds", std::move(rounds)}};
}

RunRecord record_from_json(const nlohmann::json& doc) {
  RunRecord record;
  record.config_hash = doc.at("config_hash").get<std::string>();
  record.seed = doc.at("seed").get<std::uint64_t>();
  record.benchmark = doc.at("benchmark").get<std::string>();
  record.acquisition = doc.at("acquisition").get<std::string>();
  record.strategy = doc.at("strategy").get<std::string>();
  for (const auto& r : doc.at("rounds")) {
    RoundRecord rr;
    rr.round = r.at("round").get<std::size_t>();
    rr.n_labeled = r.at("n_labeled").get<std::size_t>();
    rr.test_nll = r.at("test_nll").get<double>();
    rr.probe_milb = r.value("probe_milb", 0.0);
    rr.acquired = r.at("acquired").get<std::vector<std::size_t>>();
    record.rounds.push_back(std::move(rr));
  }
  return record;
}

nlohmann::json timing_json(const RunRecord& record) {
  std::vector<double> elapsed;
  for (const auto& r : record.rounds) elapsed.push_back(r.elapsed_seconds);
  return {{"config_hash", record.config_hash}, {"seed", record.seed}, {"elapsed_seconds", elapsed}};
}

std::vector<CurveRow> aggregate(const std::vector<RunRecord>& records) {
  if (records.empty()) throw std::invalid_argument("aggregate: need at least one record");
  const std::size_t n_rounds = records.front().rounds.size();
  for (const auto& r : records)
    if (r.rounds.size() != n_rounds) throw std::invalid_argument("aggregate: records disagree on round count");
  std::vector<CurveRow> rows;
  const double n = static_cast<double>(records.size());
  for (std::size_t i = 0; i < n_rounds; ++i) {
    CurveRow row{records.front().rounds[i].round, records.front().rounds[i].n_labeled, 0.0,
                 records.front().rounds[i].test_nll, records.front().rounds[i].test_nll, 0.0};
    for (const auto& r : records) {
      const double v = r.rounds[i].test_nll;
      row.mean += v / n;
      row.min = std::min(row.min, v);
      row.max = std::max(row.max, v);
    }
    if (records.size() > 1) {
      double ss = 0.0;
      for (const auto& r : records) ss += (r.rounds[i].test_nll - row.mean) * (r.rounds[i].test_nll - row.mean);
      row.std = std::sqrt(ss / (n - 1.0));
    }
    rows.push_back(row);
  }
  return rows;
}

void write_curves_csv(const std::vector<std::pair<std::string, std::vector<CurveRow>>>& groups, std::ostream& out) {
  const bool labelled = groups.size() > 1;
  if (labelled) out << "acquisition,";
  out << "round,n_labeled,nll_mean,nll_min,nll_max,nll_std\n";
  const auto old_precision = out.precision(10);
  for (const auto& [label, rows] : groups) {
    for (const auto& row : rows) {
      if (labelled) out << label << ',';
      out << row.round << ',' << row.n_labeled << ',' << row.mean << ',' << row.min << ',' << row.max << ','
          << row.std << '\n';
    }
  }
  out.precision(old_precision);
}

}  // namespace milb
