#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "milb/acquisition.hpp"
#include "milb/harness.hpp"
#include "milb/verify.hpp"

namespace py = pybind11;
using namespace milb;

namespace {

std::span<const double> as_span(const Eigen::VectorXd& v) {
  return {v.data(), static_cast<std::size_t>(v.size())};
}

BatchRequest make_request(std::size_t k, const std::string& strategy, double temperature, double weight,
                          std::vector<std::size_t> exclusions) {
  BatchRequest req;
  req.k = k;
  req.strategy = parse_strategy(strategy);
  req.temperature = temperature;
  req.weight = weight;
  req.exclusions = std::move(exclusions);
  return req;
}

}  // namespace

PYBIND11_MODULE(_milb, m) {
  m.doc() = "Mixture entropy bounds, MI-LB acquisition, batch selection and benchmark simulators";
  m.attr("__version__") = version_string();

  py::register_exception<DimensionError>(m, "DimensionError", PyExc_ValueError);
  py::register_exception<TrainingError>(m, "TrainingError", PyExc_RuntimeError);
  py::register_exception<ExperimentError>(m, "ExperimentError", PyExc_RuntimeError);

  py::class_<RngStream>(m, "RngStream")
      .def(py::init<std::uint64_t, std::uint64_t>(), py::arg("seed"), py::arg("stream_id") = 0)
      .def("split", &RngStream::split, py::arg("child"))
      .def("next_u64", &RngStream::next_u64)
      .def("next_double", &RngStream::next_double)
      .def_property_readonly("seed", &RngStream::seed)
      .def_property_readonly("stream_id", &RngStream::stream_id)
      .def_property_readonly("position", &RngStream::position);

  m.def("std_normal", &std_normal, py::arg("stream"));
  m.def("gumbel", &gumbel, py::arg("stream"));
  m.def("dirichlet", [](RngStream& s, const std::vector<double>& alpha) { return dirichlet(s, alpha); },
        py::arg("stream"), py::arg("alpha"));

  py::class_<DiagGaussianMixture>(m, "DiagGaussianMixture")
      .def(py::init<Eigen::VectorXd, Eigen::MatrixXd, Eigen::MatrixXd>(), py::arg("weights"), py::arg("means"),
           py::arg("variances"), "weights (K,), means and variances (K, N)")
      .def_static("gaussian", &DiagGaussianMixture::gaussian, py::arg("mean"), py::arg("variances"))
      .def_property_readonly("weights", &DiagGaussianMixture::weights)
      .def_property_readonly("means", &DiagGaussianMixture::means)
      .def_property_readonly("variances", &DiagGaussianMixture::variances)
      .def_property_readonly("n_components", &DiagGaussianMixture::n_components)
      .def_property_readonly("dim", &DiagGaussianMixture::dim)
      .def("mean", &DiagGaussianMixture::mean);

  py::class_<EnsemblePrediction>(m, "EnsemblePrediction")
      .def(py::init<std::vector<DiagGaussianMixture>>(), py::arg("members"))
      .def(py::init<std::vector<DiagGaussianMixture>, std::vector<double>>(), py::arg("members"), py::arg("weights"))
      .def_readonly("members", &EnsemblePrediction::member_mixtures)
      .def_readonly("weights", &EnsemblePrediction::member_weights);

  py::class_<MonteCarloEstimate>(m, "MonteCarloEstimate")
      .def_readonly("estimate", &MonteCarloEstimate::estimate)
      .def_readonly("stderr", &MonteCarloEstimate::stderr_)
      .def("__repr__", [](const MonteCarloEstimate& e) {
        return "MonteCarloEstimate(" + std::to_string(e.estimate) + " +- " + std::to_string(e.stderr_) + ")";
      });

  m.def("log_pdf", [](const DiagGaussianMixture& mix, const Eigen::VectorXd& y) { return log_pdf(mix, y); },
        py::arg("mixture"), py::arg("y"));
  m.def("responsibilities",
        [](const DiagGaussianMixture& mix, const Eigen::VectorXd& y) { return responsibilities(mix, as_span(y)); },
        py::arg("mixture"), py::arg("y"));
  m.def("sample", &sample, py::arg("mixture"), py::arg("stream"));
  m.def("marginal_mixture", &marginal_mixture, py::arg("prediction"));
  m.def("entropy_lower", &entropy_lower, py::arg("mixture"));
  m.def("entropy_upper", &entropy_upper, py::arg("mixture"));
  m.def("entropy_mc", &entropy_mc, py::arg("mixture"), py::arg("n_samples"), py::arg("stream"));
  m.def("entropy_exact_gaussian",
        [](const Eigen::VectorXd& variances) { return entropy_exact_gaussian(variances); }, py::arg("variances"));

  m.def("milb", &milb::milb, py::arg("prediction"), "Mutual-information lower bound of one ensemble prediction");
  m.def("milb_explicit", &milb_explicit, py::arg("prediction"));
  m.def("epistemic_variance", &epistemic_variance, py::arg("prediction"));
  m.def("mutual_information_mc", &mutual_information_mc, py::arg("prediction"), py::arg("n_samples"),
        py::arg("stream"));

  m.def("select_topk",
        [](const std::vector<double>& scores, std::size_t k, std::vector<std::size_t> exclusions) {
          return select_topk(scores, make_request(k, "topk", 1.0, 1.0, std::move(exclusions)));
        },
        py::arg("scores"), py::arg("k"), py::arg("exclusions") = std::vector<std::size_t>{});
  m.def("select_sbal",
        [](const std::vector<double>& scores, std::size_t k, double temperature, RngStream& stream,
           std::vector<std::size_t> exclusions) {
          return select_sbal(scores, make_request(k, "sbal", temperature, 1.0, std::move(exclusions)), stream);
        },
        py::arg("scores"), py::arg("k"), py::arg("temperature"), py::arg("stream"),
        py::arg("exclusions") = std::vector<std::size_t>{});
  m.def("select_maxdist",
        [](const std::vector<double>& scores, const Eigen::MatrixXd& features, std::size_t k, double weight,
           std::vector<std::size_t> exclusions) {
          return select_maxdist(scores, features, make_request(k, "maxdist", 1.0, weight, std::move(exclusions)));
        },
        py::arg("scores"), py::arg("features"), py::arg("k"), py::arg("weight"),
        py::arg("exclusions") = std::vector<std::size_t>{}, "features: (n, D), one row per candidate");
  m.def("select_bait", &select_bait, py::arg("candidates"), py::arg("labeled"), py::arg("k"),
        py::arg("ridge") = kBaitRidge);
  m.def("select_coreset", &select_coreset, py::arg("features"), py::arg("labeled"), py::arg("k"));

  py::class_<VarianceDemoReport>(m, "VarianceDemoReport")
      .def_readonly("delta", &VarianceDemoReport::delta)
      .def_readonly("trace_variance_circle", &VarianceDemoReport::trace_variance_circle)
      .def_readonly("trace_variance_caps", &VarianceDemoReport::trace_variance_caps)
      .def_readonly("entropy_gap", &VarianceDemoReport::entropy_gap)
      .def_readonly("entropy_gap_mc", &VarianceDemoReport::entropy_gap_mc)
      .def_readonly("entropy_gap_histogram", &VarianceDemoReport::entropy_gap_histogram)
      .def_readonly("passed", &VarianceDemoReport::passed);
  m.def("variance_failure_demo", &variance_failure_demo, py::arg("delta"), py::arg("n_samples"), py::arg("stream"));

  py::class_<Simulator, std::shared_ptr<Simulator>>(m, "Simulator")
      .def_property_readonly("name", &Simulator::name)
      .def_property_readonly("input_dim", &Simulator::input_dim)
      .def_property_readonly("output_dim", &Simulator::output_dim)
      .def("sample_input", &Simulator::sample_input, py::arg("stream"))
      .def("simulate", [](const Simulator& s, const Eigen::VectorXd& x, RngStream& st) { return s.simulate(as_span(x), st); },
           py::arg("x"), py::arg("stream"))
      .def("oracle", [](const Simulator& s, const Eigen::VectorXd& x) { return s.oracle(as_span(x)); }, py::arg("x"));
  m.def("make_simulator",
        [](const std::string& id) { return std::const_pointer_cast<Simulator>(make_simulator(id)); }, py::arg("id"));
  m.def("sample_dataset", &sample_dataset, py::arg("simulator"), py::arg("n"), py::arg("stream"),
        "(inputs, targets), one column per pair");
  m.def("oracle_nll", &oracle_nll, py::arg("simulator"), py::arg("inputs"), py::arg("targets"));
  m.def("kramers_escape_fraction", &kramers_escape_fraction, py::arg("sigma"), py::arg("q0"), py::arg("n_runs"),
        py::arg("stream"));

  // Configs and records cross the boundary as canonical JSON text.
  m.def("_default_config", [](const std::string& b) { return to_json(default_config(b)).dump(); });
  m.def("_config_hash", [](const std::string& doc) { return config_hash(config_from_json(nlohmann::json::parse(doc))); });
  m.def("_run_experiment",
        [](const std::string& doc, std::uint64_t seed) {
          const auto cfg = config_from_json(nlohmann::json::parse(doc));
          py::gil_scoped_release release;
          return to_json(run_experiment(cfg, seed)).dump();
        });
  m.def("_aggregate", [](const std::vector<std::string>& docs) {
    std::vector<RunRecord> records;
    for (const auto& d : docs) records.push_back(record_from_json(nlohmann::json::parse(d)));
    std::vector<std::tuple<std::size_t, std::size_t, double, double, double, double>> rows;
    for (const auto& r : aggregate(records)) rows.emplace_back(r.round, r.n_labeled, r.mean, r.min, r.max, r.std);
    return rows;
  });

  py::class_<SuiteResult>(m, "SuiteResult")
      .def_readonly("name", &SuiteResult::name)
      .def_readonly("cases", &SuiteResult::cases)
      .def_readonly("failures", &SuiteResult::failures)
      .def_readonly("worst", &SuiteResult::worst)
      .def_property_readonly("passed", &SuiteResult::passed);
  m.def("run_verify", &run_verify, py::arg("seed") = 0, py::arg("quick") = true);
}
