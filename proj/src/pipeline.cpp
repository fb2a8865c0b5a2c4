// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpsosc/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <json.hpp>

#include "gpsosc/error.hpp"
#include "gpsosc/textio.hpp"

namespace gpsosc {
namespace {

// Calls fn(i) for i in [0, n) on up to `workers` threads.
void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
  workers = std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1)));
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          fn(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

char delimiter_of(const ColumnSchema& schema) { return schema.delimiter; }

}  // namespace

unsigned resolve_workers(unsigned requested) noexcept {
  if (requested > 0) return requested;
  return std::max(1U, std::thread::hardware_concurrency());
}

std::vector<DetectionResult> detect_all(const std::vector<Trace>& traces, const DetectionConfig& cfg,
                                        unsigned workers) {
  cfg.validate();
  std::vector<DetectionResult> out(traces.size());
  parallel_for(traces.size(), resolve_workers(workers), [&](std::size_t i) { out[i] = detect(traces[i], cfg); });
  return out;
}

double RunReport::convergence_rate() const noexcept {
  return devices == 0 ? 1.0 : static_cast<double>(converged_devices) / static_cast<double>(devices);
}

bool RunReport::consistent() const noexcept {
  std::uint64_t by_label = 0;
  for (const auto& [h, passes] : removed_by) {
    for (const auto& [p, n] : passes) by_label += n;
  }
  return lines == parsed + skipped && parsed == cleaned + removed + duplicates && by_label == removed;
}

std::string RunReport::to_json() const {
  nlohmann::ordered_json j;
  j["input"] = {{"lines", lines}, {"parsed", parsed}, {"skipped", skipped}, {"duplicates", duplicates}};
  j["devices"] = devices;
  j["cleaned"] = cleaned;
  j["removed"] = removed;
  nlohmann::ordered_json by = nlohmann::ordered_json::object();
  for (const auto& [h, passes] : removed_by) {
    nlohmann::ordered_json per_pass = nlohmann::ordered_json::object();
    for (const auto& [p, n] : passes) per_pass[std::to_string(p)] = n;
    by[h] = per_pass;
  }
  j["removed_by"] = by;
  j["converged_devices"] = converged_devices;
  j["convergence_rate"] = convergence_rate();
  if (wall_seconds) j["wall_seconds"] = *wall_seconds;
  nlohmann::ordered_json cfg = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config) cfg[k] = v;
  j["config"] = cfg;
  j["errors"] = error_samples;
  return j.dump(2);
}

std::string RunReport::to_text() const {
  std::ostringstream os;
  os << "records: " << lines << " (parsed " << parsed << ", skipped " << skipped << ", duplicates " << duplicates
     << ")\n";
  os << "devices: " << devices << ", converged " << converged_devices << "\n";
  os << "kept: " << cleaned << ", removed: " << removed << "\n";
  for (const auto& [h, passes] : removed_by) {
    os << "  " << h << ":";
    for (const auto& [p, n] : passes) os << " pass" << p << "=" << n;
    os << "\n";
  }
  if (wall_seconds) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3f", *wall_seconds);
    os << "wall time: " << buf << " s\n";
  }
  for (const auto& e : error_samples) os << "  bad record: " << e << "\n";
  return os.str();
}

std::string default_audit_path(const std::string& output) {
  const bool gz = has_gzip_extension(output);
  const std::filesystem::path base = gz ? output.substr(0, output.size() - 3) : output;
  std::filesystem::path audit = base;
  audit.replace_filename(base.stem().string() + ".audit" + base.extension().string());
  return audit.string() + (gz ? output.substr(output.size() - 3) : "");
}

RunReport clean_files(const std::vector<std::string>& inputs, const std::string& output, const CleanOptions& options) {
  const auto started = std::chrono::steady_clock::now();
  options.config.validate();
  const unsigned workers = resolve_workers(options.workers);
  const char delim = delimiter_of(options.schema);
  const std::string delim_str(1, delim);

  RunReport report;
  report.config = options.config.echo();

  LineWriter out(output);
  std::optional<LineWriter> audit;
  if (options.audit) audit.emplace(options.audit_path.empty() ? default_audit_path(output) : options.audit_path);
  bool header_written = false;

  for (const std::string& path : inputs) {
    DeviceStream stream(path, options.schema, options.stream);
    if (!header_written && !stream.header_line().empty()) {
      out.write_line(stream.header_line());
      if (audit) audit->write_line(stream.header_line() + delim_str + "removed_by" + delim_str + "pass");
      header_written = true;
    }

    bool more = true;
    while (more) {
      std::vector<DeviceBatch> chunk;
      std::size_t chunk_size = 0;
      while (chunk_size < options.chunk_pings) {
        auto batch = stream.next();
        if (!batch) {
          more = false;
          break;
        }
        chunk_size += batch->trace.pings.size();
        chunk.push_back(std::move(*batch));
      }
      std::vector<DetectionResult> results(chunk.size());
      parallel_for(chunk.size(), workers,
                   [&](std::size_t i) { results[i] = detect(chunk[i].trace, options.config); });

      for (std::size_t i = 0; i < chunk.size(); ++i) {
        const DeviceBatch& batch = chunk[i];
        const DetectionResult& res = results[i];
        std::unordered_map<std::uint64_t, const LabeledRemoval*> removed;
        removed.reserve(res.removals.size());
        for (const auto& r : res.removals) removed.emplace(r.ping.seq, &r);
        for (std::size_t k = 0; k < batch.trace.pings.size(); ++k) {
          const auto it = removed.find(batch.trace.pings[k].seq);
          if (it == removed.end()) {
            out.write_line(batch.raw_lines[k]);
          } else if (audit) {
            audit->write_line(batch.raw_lines[k] + delim_str + std::string(heuristic_name(it->second->heuristic)) +
                              delim_str + std::to_string(it->second->pass));
          }
        }
        ++report.devices;
        report.duplicates += batch.duplicates;
        report.cleaned += res.cleaned.pings.size();
        report.removed += res.removals.size();
        if (res.converged) ++report.converged_devices;
        for (const auto& r : res.removals) ++report.removed_by[std::string(heuristic_name(r.heuristic))][r.pass];
      }
    }

    const ErrorSummary& s = stream.summary();
    report.lines += s.total_records;
    report.parsed += s.parsed;
    report.skipped += s.skipped;
    for (const auto& e : s.samples) {
      if (report.error_samples.size() < 20) report.error_samples.push_back(path + ": " + e);
    }
  }

  out.close();
  if (audit) audit->close();
  if (options.timing) {
    report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  }
  return report;
}

}  // namespace gpsosc
