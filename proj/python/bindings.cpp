// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "gpsosc/config.hpp"
#include "gpsosc/detector.hpp"
#include "gpsosc/error.hpp"
#include "gpsosc/geo.hpp"
#include "gpsosc/pipeline.hpp"
#include "gpsosc/synthlab.hpp"
#include "gpsosc/trace.hpp"

namespace py = pybind11;
using namespace gpsosc;

namespace {

DetectionConfig config_from(const py::dict& kwargs) {
  DetectionConfig cfg;
  for (const auto& [k, v] : kwargs) {
    const auto key = py::str(k).cast<std::string>();
    cfg.set(key, py::str(v).cast<std::string>());
  }
  cfg.validate();
  return cfg;
}

}  // namespace

PYBIND11_MODULE(_gpsosc, m) {
  m.doc() = "GPS ping oscillation detection";

  auto error = py::register_exception<Error>(m, "Error");
  py::register_exception<ConfigError>(m, "ConfigError", error);
  py::register_exception<IoError>(m, "IoError", error);
  py::register_exception<ParseError>(m, "ParseError", error);
  py::register_exception<InputDomainError>(m, "InputDomainError", error);
  py::register_exception<ContractError>(m, "ContractError", error);
  py::register_exception<OrderingError>(m, "OrderingError", error);
  py::register_exception<GenerationError>(m, "GenerationError", error);

  m.def(
      "encode_geohash", [](double lat, double lon, int precision) {
        return encode_geohash(LatLon::checked(lat, lon), precision).code();
      },
      py::arg("lat"), py::arg("lon"), py::arg("precision") = 7);
  m.def(
      "decode_geohash",
      [](const std::string& code) {
        const CellBox b = decode_geohash(std::string_view(code));
        py::dict d;
        d["lat_min"] = b.lat_min;
        d["lat_max"] = b.lat_max;
        d["lon_min"] = b.lon_min;
        d["lon_max"] = b.lon_max;
        d["center"] = py::make_tuple(b.center.lat, b.center.lon);
        return d;
      },
      py::arg("code"));
  m.def(
      "distance",
      [](double lat1, double lon1, double lat2, double lon2) {
        return great_circle_distance(LatLon::checked(lat1, lon1), LatLon::checked(lat2, lon2));
      },
      py::arg("lat1"), py::arg("lon1"), py::arg("lat2"), py::arg("lon2"));
  m.def("derive_t_min", &derive_t_min, py::arg("dist_c_m"), py::arg("v_max_mps"));

  py::class_<DetectionConfig>(m, "DetectionConfig")
      .def(py::init([](const py::kwargs& kwargs) { return config_from(kwargs); }))
      .def("set", [](DetectionConfig& c, const std::string& k, const std::string& v) { c.set(k, v); })
      .def("get", [](const DetectionConfig& c, const std::string& k) { return c.get(k); })
      .def("validate", &DetectionConfig::validate)
      .def("echo", &DetectionConfig::echo)
      .def_property_readonly("t_min", &DetectionConfig::t_min)
      .def_static("keys",
                  [] {
                    std::vector<std::string> out;
                    for (auto k : DetectionConfig::keys()) out.emplace_back(k);
                    return out;
                  })
      .def_static("load", &load_config, py::arg("path"))
      .def_static("parse", [](const std::string& text) { return parse_config(text); }, py::arg("text"));

  py::class_<Ping>(m, "Ping")
      .def(py::init([](std::string device_id, double t, double lat, double lon, std::uint64_t seq) {
             return Ping{std::move(device_id), t, LatLon::checked(lat, lon), seq};
           }),
           py::arg("device_id"), py::arg("t"), py::arg("lat"), py::arg("lon"), py::arg("seq") = 0)
      .def_readonly("device_id", &Ping::device_id)
      .def_readonly("t", &Ping::t)
      .def_property_readonly("lat", [](const Ping& p) { return p.loc.lat; })
      .def_property_readonly("lon", [](const Ping& p) { return p.loc.lon; })
      .def_readonly("seq", &Ping::seq)
      .def("__repr__", [](const Ping& p) {
        return "Ping(" + p.device_id + ", t=" + std::to_string(p.t) + ", seq=" + std::to_string(p.seq) + ")";
      });

  py::class_<Trace>(m, "Trace")
      .def_readonly("device_id", &Trace::device_id)
      .def_readonly("pings", &Trace::pings)
      .def("__len__", [](const Trace& t) { return t.pings.size(); });

  m.def("build_trace", &build_trace, py::arg("pings"));
  m.def(
      "read_traces", [](const std::string& path) { return read_traces(path); }, py::arg("path"));

  py::class_<LabeledRemoval>(m, "Removal")
      .def_readonly("ping", &LabeledRemoval::ping)
      .def_property_readonly("heuristic",
                             [](const LabeledRemoval& r) { return std::string(heuristic_name(r.heuristic)); })
      .def_readonly("pass_number", &LabeledRemoval::pass);

  py::class_<DetectionResult>(m, "DetectionResult")
      .def_readonly("cleaned", &DetectionResult::cleaned)
      .def_readonly("removals", &DetectionResult::removals)
      .def_readonly("passes_run", &DetectionResult::passes_run)
      .def_readonly("converged", &DetectionResult::converged);

  m.def(
      "detect", [](const Trace& t, const DetectionConfig& cfg) { return detect(t, cfg); }, py::arg("trace"),
      py::arg("config") = DetectionConfig{});
  m.def("detect_all", &detect_all, py::arg("traces"), py::arg("config") = DetectionConfig{},
        py::arg("workers") = 0u, py::call_guard<py::gil_scoped_release>());

  m.def(
      "clean_files",
      [](const std::vector<std::string>& inputs, const std::string& output, const DetectionConfig& cfg,
         const std::string& schema, bool audit, unsigned workers, bool timing) {
        CleanOptions opts;
        opts.config = cfg;
        if (!schema.empty()) opts.schema = ColumnSchema::parse(schema);
        opts.audit = audit;
        opts.workers = workers;
        opts.timing = timing;
        py::gil_scoped_release release;
        return clean_files(inputs, output, opts).to_json();
      },
      py::arg("inputs"), py::arg("output"), py::arg("config") = DetectionConfig{}, py::arg("schema") = "",
      py::arg("audit") = false, py::arg("workers") = 0u, py::arg("timing") = true);

  auto s = m.def_submodule("synth", "synthetic scenarios and scoring");
  py::class_<synth::Score>(s, "Score")
      .def_readonly("tp", &synth::Score::tp)
      .def_readonly("fp", &synth::Score::fp)
      .def_readonly("fn", &synth::Score::fn)
      .def_readonly("tn", &synth::Score::tn)
      .def_readonly("precision", &synth::Score::precision)
      .def_readonly("recall", &synth::Score::recall)
      .def_readonly("f1", &synth::Score::f1)
      .def_readonly("data_loss_rate", &synth::Score::data_loss_rate);
  py::class_<synth::GroundTruth>(s, "GroundTruth")
      .def("positives", &synth::GroundTruth::positives)
      .def("__len__", [](const synth::GroundTruth& g) { return g.labels.size(); })
      .def("is_oscillation", [](const synth::GroundTruth& g, std::uint64_t seq) {
        const synth::TruthLabel* l = g.find(seq);
        if (!l) throw py::key_error(std::to_string(seq));
        return l->oscillation;
      });
  py::class_<synth::Scenario>(s, "Scenario")
      .def_readonly("traces", &synth::Scenario::traces)
      .def_readonly("truth", &synth::Scenario::truth)
      .def_property_readonly("injection_count", [](const synth::Scenario& sc) { return sc.injected.size(); })
      .def("trace_csv", [](const synth::Scenario& sc) { return synth::trace_csv(sc); })
      .def("truth_csv", [](const synth::Scenario& sc) { return synth::truth_csv(sc); })
      .def("write", [](const synth::Scenario& sc, const std::string& dir) { synth::write_scenario(sc, dir); });

  s.def(
      "generate", [](const std::string& json) { return synth::generate(synth::parse_scenario(json)); },
      py::arg("scenario_json"), py::call_guard<py::gil_scoped_release>());
  s.def("load_truth", &synth::load_truth, py::arg("path"));
  s.def("score", &synth::score, py::arg("results"), py::arg("truth"));
  s.def("score_speed_baseline", &synth::score_speed_baseline, py::arg("traces"), py::arg("truth"),
        py::arg("v_limit"), py::arg("t_floor") = kDefaultTimeFloor);
}
