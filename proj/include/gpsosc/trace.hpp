// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gpsosc/ping.hpp"

namespace gpsosc {

/// Time-ordered, de-duplicated sightings of one device.
///
/// Invariants: pings are nondecreasing in t with ties ordered by seq, all
/// share device_id, and no two pings have identical (t, lat, lon).
struct Trace {
  std::string device_id;
  std::vector<Ping> pings;
};

/// Canonicalizes one device's pings: stable sort by (t, seq), then collapse
/// exact (t, lat, lon) duplicates keeping the lowest seq. Throws
/// ContractError if the pings carry more than one device id.
Trace build_trace(std::vector<Ping> pings);

/// Same as build_trace, applying the identical permutation and duplicate
/// removal to `payload` (one entry per input ping). Returns the number of
/// duplicates dropped.
std::size_t canonicalize(std::vector<Ping>& pings, std::vector<std::string>* payload);

// ---------------------------------------------------------------------------
// Delimited input

/// A column selected by zero-based index or by header name.
struct ColumnRef {
  std::optional<std::size_t> index;
  std::string name;

  static ColumnRef at(std::size_t i) { return ColumnRef{i, {}}; }
  static ColumnRef named(std::string n) { return ColumnRef{std::nullopt, std::move(n)}; }
};

enum class HeaderMode { kAuto, kPresent, kAbsent };

/// Column mapping for ping records.
///
/// Textual form (as accepted by parse()): comma-separated `key=value` pairs,
/// keys `device`, `time`, `lat`, `lon` (value is a column index or header
/// name), `delim` (a single character, or `tab`/`comma`/`semicolon`/`pipe`)
/// and `header` (`auto`, `yes`, `no`). Unspecified keys keep the defaults
/// device=0,time=1,lat=2,lon=3,delim=comma,header=auto.
struct ColumnSchema {
  char delimiter = ',';
  HeaderMode header = HeaderMode::kAuto;
  ColumnRef device = ColumnRef::at(0);
  ColumnRef time = ColumnRef::at(1);
  ColumnRef lat = ColumnRef::at(2);
  ColumnRef lon = ColumnRef::at(3);

  static ColumnSchema parse(std::string_view text);
  bool uses_names() const noexcept;
};

/// Column indices after header resolution.
struct ResolvedSchema {
  char delimiter = ',';
  std::size_t device = 0;
  std::size_t time = 1;
  std::size_t lat = 2;
  std::size_t lon = 3;

  std::size_t max_index() const noexcept;
};

/// Resolves named columns against a header line. Throws ConfigError when a
/// name is missing.
ResolvedSchema resolve_schema(const ColumnSchema& schema, std::string_view header_line);
ResolvedSchema resolve_schema(const ColumnSchema& schema);

/// Splits one delimited record. Fields wrapped in double quotes have the
/// quotes stripped; the delimiter inside quotes is literal.
std::vector<std::string_view> split_fields(std::string_view line, char delimiter);

/// Timestamps above this are taken as epoch milliseconds.
inline constexpr double kMillisecondThreshold = 1e11;

/// Parses one record. Throws RecordError (carrying `line_no`) on a missing
/// column, unparseable number, negative/non-finite time or out-of-range
/// coordinate.
Ping parse_ping_record(std::string_view line, const ResolvedSchema& schema, std::uint64_t line_no);

// ---------------------------------------------------------------------------
// Device streaming

struct ErrorSummary {
  std::uint64_t total_records = 0;  // non-header lines
  std::uint64_t parsed = 0;
  std::uint64_t skipped = 0;
  std::vector<std::string> samples;  // first few error messages
};

struct DeviceBatch {
  Trace trace;
  std::vector<std::string> raw_lines;  // parallel to trace.pings
  std::size_t duplicates = 0;
};

struct StreamOptions {
  /// Non-contiguous inputs with at most this many records are grouped in
  /// memory; larger ones are spilled to per-hash bucket files first.
  std::uint64_t in_memory_limit = 5'000'000;
  std::size_t spill_buckets = 64;
  std::filesystem::path spill_dir = std::filesystem::temp_directory_path();
  std::size_t max_error_samples = 20;
  bool keep_raw_lines = true;
};

enum class GroupingMode { kStreaming, kInMemory, kSpill };

/// Yields one complete Trace per device from a delimited file.
///
/// Device-contiguous files stream with memory bounded by the open device.
/// Otherwise records are grouped first: in memory for moderate files, or by a
/// spill pass that partitions records into hash buckets on disk and groups
/// one bucket at a time. Devices come out in first-appearance order (within
/// a bucket, for the spill path). Bad records are counted, never fatal.
class DeviceStream {
 public:
  DeviceStream(std::string path, ColumnSchema schema, StreamOptions options = {});
  ~DeviceStream();
  DeviceStream(const DeviceStream&) = delete;
  DeviceStream& operator=(const DeviceStream&) = delete;

  std::optional<DeviceBatch> next();

  /// Header line of the input (empty when the file has none).
  const std::string& header_line() const noexcept;
  const ErrorSummary& summary() const noexcept;
  GroupingMode mode() const noexcept;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Reads every device of a file into memory.
std::vector<Trace> read_traces(const std::string& path, const ColumnSchema& schema = {},
                               ErrorSummary* summary = nullptr);

}  // namespace gpsosc
