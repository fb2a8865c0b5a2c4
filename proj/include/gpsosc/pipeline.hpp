// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gpsosc/config.hpp"
#include "gpsosc/detector.hpp"
#include "gpsosc/trace.hpp"

namespace gpsosc {

/// Number of workers to use when the caller asks for 0 ("auto").
unsigned resolve_workers(unsigned requested) noexcept;

/// Runs detect on every trace with a pool of `workers` threads. The result
/// order matches the input order regardless of worker count.
std::vector<DetectionResult> detect_all(const std::vector<Trace>& traces, const DetectionConfig& cfg,
                                        unsigned workers = 0);

struct RunReport {
  std::uint64_t lines = 0;  // data records, header excluded
  std::uint64_t parsed = 0;
  std::uint64_t skipped = 0;
  std::uint64_t duplicates = 0;
  std::uint64_t devices = 0;
  std::uint64_t cleaned = 0;
  std::uint64_t removed = 0;
  std::uint64_t converged_devices = 0;
  std::map<std::string, std::map<int, std::uint64_t>> removed_by;  // heuristic -> pass -> count
  std::optional<double> wall_seconds;
  std::vector<std::pair<std::string, std::string>> config;
  std::vector<std::string> error_samples;

  double convergence_rate() const noexcept;
  /// parsed == cleaned + removed + duplicates and lines == parsed + skipped.
  bool consistent() const noexcept;

  std::string to_json() const;
  std::string to_text() const;
};

struct CleanOptions {
  ColumnSchema schema;
  DetectionConfig config;
  bool audit = false;
  std::string audit_path;  // default: out.csv -> out.audit.csv, out.csv.gz -> out.audit.csv.gz
  unsigned workers = 0;
  bool timing = true;
  StreamOptions stream;
  /// Devices are handed to the pool in chunks of about this many pings.
  std::size_t chunk_pings = 1 << 18;
};

/// Default audit sidecar path for an output file.
std::string default_audit_path(const std::string& output);

/// Streams every input, detects per device, writes kept rows to `output`
/// (and removed rows plus `removed_by`,`pass` columns to the audit sidecar
/// when requested). Rows keep their original text; devices appear in input
/// order, each device's rows in canonical time order.
RunReport clean_files(const std::vector<std::string>& inputs, const std::string& output, const CleanOptions& options);

}  // namespace gpsosc
