// Thin string-in, string-out bindings; the Python package decodes JSON.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "hankelab/hankel.hpp"
#include "hankelab/harness.hpp"
#include "hankelab/journe.hpp"

namespace py = pybind11;
using namespace hankelab;

namespace {

ExperimentConfig config_from(const std::string& text) {
  ExperimentConfig cfg;
  cfg.frozen = default_frozen_path();
  return parse_config(text, cfg);
}

std::string run(const std::string& kind, const std::string& config_text, bool freeze) {
  auto cfg = config_from(config_text);
  Report r;
  {
    py::gil_scoped_release release;
    r = run_experiment(cfg, parse_kind(kind), freeze);
  }
  return render_report(r, ReportFormat::kJson);
}

std::string journe(const std::string& collection_text, const std::string& delta, const std::string& epsilon) {
  auto coll = parse_collection(collection_text);
  JourneConfig jc;
  jc.delta = parse_rational(delta);
  jc.epsilon = parse_rational(epsilon);
  auto res = journe_full(coll, jc);
  ojson doc;
  doc["schema"] = "v1";
  doc["V_measure"] = to_string(res.V_measure);
  doc["shadow_measure"] = to_string(res.shadow_measure);
  doc["per_rect"] = ojson::array();
  for (const auto& e : res.entries)
    doc["per_rect"].push_back(
        {{"rect", serialize_rect(e.rect)}, {"emb", to_string(e.emb)}, {"iota", e.iota}, {"contained", e.contained}});
  return doc.dump();
}

double hankel_norm(const std::string& coeffs_json, int N) {
  auto c = coeffs_from_json(coeffs_json);
  WaveletFamily fam(N, c.n);
  return operator_norm(hankel_matrix(synthesize(c, fam)));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Product-BMO and Hankel operator experiments";
  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  m.def("run_experiment", &run, py::arg("kind"), py::arg("config") = "", py::arg("freeze") = false,
        "Runs an experiment kind on key = value config text; returns the JSON report.");
  m.def("generate_coeffs",
        [](const std::string& config, std::uint64_t trial) { return coeffs_to_json(generate_coeffs(config_from(config), trial)); },
        py::arg("config") = "", py::arg("trial") = 0);
  m.def("generate_collection",
        [](const std::string& config, std::uint64_t trial) {
          return serialize_collection(generate_collection(config_from(config), trial));
        },
        py::arg("config") = "", py::arg("trial") = 0);
  m.def("bmo_estimate",
        [](const std::string& coeffs_json, const std::string& strategy) {
          return estimate_to_json(bmo_estimate(coeffs_from_json(coeffs_json), parse_strategy(strategy)));
        },
        py::arg("coeffs"), py::arg("strategy") = "greedy");
  m.def("bmo_minus1",
        [](const std::string& coeffs_json, const std::string& strategy) {
          return estimate_to_json(bmo_minus1(coeffs_from_json(coeffs_json), parse_strategy(strategy)));
        },
        py::arg("coeffs"), py::arg("strategy") = "greedy");
  m.def("journe", &journe, py::arg("collection"), py::arg("delta") = "1/8", py::arg("epsilon") = "1/2");
  m.def("hankel_norm", &hankel_norm, py::arg("coeffs"), py::arg("N"));
  m.def("operation_catalog", &operation_catalog);
  m.def("uncovered_operations", &uncovered_operations);
}
