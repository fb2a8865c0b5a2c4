// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpsosc/cli.hpp"

#include <chrono>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "gpsosc/config.hpp"
#include "gpsosc/error.hpp"
#include "gpsosc/pipeline.hpp"
#include "gpsosc/synthlab.hpp"
#include "gpsosc/textio.hpp"
#include "gpsosc/trace.hpp"

namespace gpsosc {
namespace {

struct CommonArgs {
  std::string config_path;
  std::vector<std::string> overrides;  // key=value
  std::string schema = "";
  unsigned workers = 0;
  std::string report_path;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool with_schema) {
  cmd->add_option("--config", a.config_path, "key = value detection config file (unit suffixes allowed)");
  cmd->add_option("--set", a.overrides, "override one config value, e.g. --set dist_g=4mi");
  cmd->add_option("--workers", a.workers, "worker threads (0 = all cores)");
  cmd->add_option("--report", a.report_path, "write a JSON report to this path");
  if (with_schema) {
    cmd->add_option("--schema", a.schema, "column schema, e.g. device=uid,time=ts,lat=y,lon=x,delim=tab");
  }
}

DetectionConfig build_config(const CommonArgs& a) {
  DetectionConfig cfg = a.config_path.empty() ? DetectionConfig{} : load_config(a.config_path);
  for (const std::string& kv : a.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  cfg.validate();
  return cfg;
}

void write_text_file(const std::string& path, const std::string& text) {
  LineWriter w(path);
  w.write(text);
  w.close();
}

std::string score_line(const char* method, std::size_t removed, const synth::Score& s) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-10s %9zu %8zu %8zu %8zu %9zu %10.4f %8.4f %8.4f %10.6f\n", method, removed, s.tp,
                s.fp, s.fn, s.tn, s.precision, s.recall, s.f1, s.data_loss_rate);
  return buf;
}

nlohmann::ordered_json score_json(const char* method, std::size_t removed, const synth::Score& s) {
  return {{"method", method}, {"removed", removed},      {"tp", s.tp},
          {"fp", s.fp},       {"fn", s.fn},              {"tn", s.tn},
          {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1},
          {"data_loss_rate", s.data_loss_rate}};
}

std::vector<Trace> read_labeled_traces(const std::string& path, const std::string& schema, std::ostream& err) {
  ErrorSummary summary;
  auto traces = read_traces(path, schema.empty() ? ColumnSchema{} : ColumnSchema::parse(schema), &summary);
  if (summary.skipped > 0) {
    err << "gpsosc: skipped " << summary.skipped << " malformed record(s) in " << path << "\n";
  }
  return traces;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Detect and remove oscillation sightings from GPS ping streams", "gpsosc"};
  app.require_subcommand(1);

  // clean
  CommonArgs clean_args;
  std::vector<std::string> clean_inputs;
  std::string clean_output;
  bool audit = false;
  std::string audit_path;
  bool no_timing = false;
  auto* clean = app.add_subcommand("clean", "clean delimited ping files");
  clean->add_option("inputs", clean_inputs, "input files (plain or .gz)")->required();
  clean->add_option("-o,--output", clean_output, "cleaned output file (.gz compresses)")->required();
  add_common(clean, clean_args, true);
  clean->add_flag("--audit", audit, "write removed rows with removed_by,pass columns to a sidecar");
  clean->add_option("--audit-path", audit_path, "sidecar path (default out.audit.csv for out.csv)");
  clean->add_flag("--no-timing", no_timing, "omit wall time from the report");

  // synth
  std::string synth_spec;
  std::string synth_dir;
  std::optional<std::uint64_t> synth_seed;
  auto* synth_cmd = app.add_subcommand("synth", "generate a labeled synthetic scenario");
  synth_cmd->add_option("spec", synth_spec, "scenario JSON")->required();
  synth_cmd->add_option("-o,--output", synth_dir, "output directory")->required();
  synth_cmd->add_option("--seed", synth_seed, "override the scenario seed");

  // eval
  CommonArgs eval_args;
  std::string eval_trace, eval_truth;
  std::vector<std::string> baselines;
  auto* eval = app.add_subcommand("eval", "score detection against ground truth");
  eval->add_option("trace", eval_trace, "trace file")->required();
  eval->add_option("truth", eval_truth, "truth file")->required();
  add_common(eval, eval_args, true);
  eval->add_option("--baseline", baselines, "extra comparison rows (speed)")
      ->check(CLI::IsMember({"speed"}));

  // sweep
  CommonArgs sweep_args;
  std::string sweep_trace, sweep_truth, sweep_param, sweep_grid;
  auto* sweep_cmd = app.add_subcommand("sweep", "score detection across a grid of one parameter");
  sweep_cmd->add_option("trace", sweep_trace, "trace file")->required();
  sweep_cmd->add_option("truth", sweep_truth, "truth file")->required();
  add_common(sweep_cmd, sweep_args, true);
  sweep_cmd->add_option("--param", sweep_param, "config field to vary")->required();
  sweep_cmd->add_option("--grid", sweep_grid, "comma-separated values, units allowed")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*clean) {
      CleanOptions opts;
      opts.config = build_config(clean_args);
      if (!clean_args.schema.empty()) opts.schema = ColumnSchema::parse(clean_args.schema);
      opts.audit = audit || !audit_path.empty();
      opts.audit_path = audit_path;
      opts.workers = clean_args.workers;
      opts.timing = !no_timing;
      const RunReport report = clean_files(clean_inputs, clean_output, opts);
      err << report.to_text();
      if (!clean_args.report_path.empty()) write_text_file(clean_args.report_path, report.to_json() + "\n");
      return kExitOk;
    }

    if (*synth_cmd) {
      synth::ScenarioSpec spec = synth::load_scenario(synth_spec);
      if (synth_seed) spec.seed = *synth_seed;
      const synth::Scenario scn = synth::generate(spec);
      synth::write_scenario(scn, synth_dir);
      std::size_t pings = 0;
      for (const auto& t : scn.traces) pings += t.pings.size();
      err << "gpsosc: wrote " << scn.traces.size() << " device(s), " << pings << " ping(s), "
          << scn.injected.size() << " injection(s), " << scn.truth.positives() << " oscillation ping(s) to "
          << synth_dir << "\n";
      return kExitOk;
    }

    if (*eval) {
      const DetectionConfig cfg = build_config(eval_args);
      const synth::GroundTruth truth = synth::load_truth(eval_truth);
      const auto traces = read_labeled_traces(eval_trace, eval_args.schema, err);
      const auto results = detect_all(traces, cfg, eval_args.workers);
      std::size_t removed = 0;
      for (const auto& r : results) removed += r.removals.size();
      const synth::Score s = synth::score(results, truth);

      char head[256];
      std::snprintf(head, sizeof head, "%-10s %9s %8s %8s %8s %9s %10s %8s %8s %10s\n", "method", "removed", "tp",
                    "fp", "fn", "tn", "precision", "recall", "f1", "data_loss");
      out << head << score_line("detector", removed, s);
      nlohmann::ordered_json rows = nlohmann::ordered_json::array();
      rows.push_back(score_json("detector", removed, s));
      for (const auto& b : baselines) {
        if (b != "speed") continue;
        const synth::Score bs = synth::score_speed_baseline(traces, truth, cfg.v_max, cfg.t_floor);
        out << score_line("speed", bs.tp + bs.fp, bs);
        rows.push_back(score_json("speed", bs.tp + bs.fp, bs));
      }
      if (!eval_args.report_path.empty()) {
        nlohmann::ordered_json j;
        j["rows"] = rows;
        write_text_file(eval_args.report_path, j.dump(2) + "\n");
      }
      return kExitOk;
    }

    if (*sweep_cmd) {
      const DetectionConfig cfg = build_config(sweep_args);
      cfg.get(sweep_param);  // fail before reading any data
      std::vector<std::string> grid;
      for (const auto& v : CLI::detail::split(sweep_grid, ',')) {
        const std::string trimmed = CLI::detail::trim_copy(v);
        if (!trimmed.empty()) grid.push_back(trimmed);
      }
      const synth::GroundTruth truth = synth::load_truth(sweep_truth);
      const auto traces = read_labeled_traces(sweep_trace, sweep_args.schema, err);
      const auto rows = synth::sweep(traces, truth, cfg, sweep_param, grid, sweep_args.workers);
      out << synth::sweep_table(sweep_param, rows);
      if (!sweep_args.report_path.empty()) {
        write_text_file(sweep_args.report_path, synth::sweep_json(sweep_param, rows) + "\n");
      }
      return kExitOk;
    }
  } catch (const IoError& e) {
    err << "gpsosc: error: " << e.what() << "\n";
    return kExitIo;
  } catch (const ConfigError& e) {
    err << "gpsosc: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const GenerationError& e) {
    err << "gpsosc: infeasible scenario: " << e.what() << "\n";
    return kExitConfig;
  } catch (const Error& e) {
    err << "gpsosc: error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "gpsosc: error: " << e.what() << "\n";
    return kExitIo;
  }
  return kExitOk;
}

}  // namespace gpsosc
