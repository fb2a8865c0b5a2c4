// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpsosc/trace.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <deque>
#include <functional>
#include <numeric>
#include <unordered_map>
#include <unordered_set>

#include "gpsosc/error.hpp"
#include "gpsosc/textio.hpp"

namespace gpsosc {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::optional<double> parse_double(std::string_view s) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

char parse_delimiter(std::string_view v) {
  if (v == "comma") return ',';
  if (v == "tab" || v == "\\t") return '\t';
  if (v == "semicolon") return ';';
  if (v == "pipe") return '|';
  if (v == "space") return ' ';
  if (v.size() == 1) return v.front();
  throw ConfigError("invalid delimiter '" + std::string(v) + "'");
}

ColumnRef parse_column(std::string_view v) {
  if (v.empty()) throw ConfigError("empty column reference in schema");
  std::size_t idx = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), idx);
  if (ec == std::errc() && ptr == v.data() + v.size()) return ColumnRef::at(idx);
  return ColumnRef::named(std::string(v));
}

std::size_t resolve_column(const ColumnRef& ref, const std::vector<std::string_view>& header, const char* role) {
  if (ref.index) return *ref.index;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (trim(header[i]) == ref.name) return i;
  }
  throw ConfigError(std::string("column '") + ref.name + "' for " + role + " not found in header");
}

}  // namespace

// ---------------------------------------------------------------------------

std::size_t canonicalize(std::vector<Ping>& pings, std::vector<std::string>* payload) {
  if (payload != nullptr && payload->size() != pings.size()) {
    throw ContractError("canonicalize: payload size differs from ping count");
  }
  if (!pings.empty()) {
    const std::string& id = pings.front().device_id;
    for (const Ping& p : pings) {
      if (p.device_id != id) {
        throw ContractError("build_trace: mixed device ids '" + id + "' and '" + p.device_id + "'");
      }
    }
  }

  std::vector<std::size_t> order(pings.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const Ping& pa = pings[a];
    const Ping& pb = pings[b];
    if (pa.t != pb.t) return pa.t < pb.t;
    return pa.seq < pb.seq;
  });

  std::vector<std::size_t> keep;
  keep.reserve(order.size());
  std::size_t run_start = 0;  // index into keep where the current equal-t run begins
  for (std::size_t k = 0; k < order.size(); ++k) {
    const Ping& p = pings[order[k]];
    if (keep.empty() || pings[keep.back()].t != p.t) run_start = keep.size();
    bool dup = false;
    for (std::size_t j = run_start; j < keep.size(); ++j) {
      const Ping& q = pings[keep[j]];
      if (q.loc.lat == p.loc.lat && q.loc.lon == p.loc.lon) {
        dup = true;
        break;
      }
    }
    if (!dup) keep.push_back(order[k]);
  }

  const std::size_t dropped = pings.size() - keep.size();
  std::vector<Ping> sorted;
  sorted.reserve(keep.size());
  for (std::size_t i : keep) sorted.push_back(std::move(pings[i]));
  pings = std::move(sorted);
  if (payload != nullptr) {
    std::vector<std::string> raw;
    raw.reserve(keep.size());
    for (std::size_t i : keep) raw.push_back(std::move((*payload)[i]));
    *payload = std::move(raw);
  }
  return dropped;
}

Trace build_trace(std::vector<Ping> pings) {
  canonicalize(pings, nullptr);
  Trace trace;
  if (!pings.empty()) trace.device_id = pings.front().device_id;
  trace.pings = std::move(pings);
  return trace;
}

// ---------------------------------------------------------------------------

ColumnSchema ColumnSchema::parse(std::string_view text) {
  ColumnSchema schema;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find(',', pos);
    // a literal comma delimiter is written "delim=,", which splits as an empty item
    if (end == std::string_view::npos) end = text.size();
    std::string_view item = trim(text.substr(pos, end - pos));
    if (item == "delim=" && end < text.size()) {
      schema.delimiter = ',';
      pos = end + 1;
      continue;
    }
    pos = end + 1;
    if (item.empty()) {
      if (end >= text.size()) break;
      continue;
    }
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) throw ConfigError("schema item without '=': '" + std::string(item) + "'");
    const std::string_view key = trim(item.substr(0, eq));
    const std::string_view value = trim(item.substr(eq + 1));
    if (key == "device") {
      schema.device = parse_column(value);
    } else if (key == "time") {
      schema.time = parse_column(value);
    } else if (key == "lat") {
      schema.lat = parse_column(value);
    } else if (key == "lon") {
      schema.lon = parse_column(value);
    } else if (key == "delim") {
      schema.delimiter = parse_delimiter(value);
    } else if (key == "header") {
      if (value == "auto") {
        schema.header = HeaderMode::kAuto;
      } else if (value == "yes" || value == "true") {
        schema.header = HeaderMode::kPresent;
      } else if (value == "no" || value == "false") {
        schema.header = HeaderMode::kAbsent;
      } else {
        throw ConfigError("schema header must be auto, yes or no");
      }
    } else {
      throw ConfigError("unknown schema key '" + std::string(key) + "'");
    }
    if (end >= text.size()) break;
  }
  return schema;
}

bool ColumnSchema::uses_names() const noexcept {
  return !device.index || !time.index || !lat.index || !lon.index;
}

std::size_t ResolvedSchema::max_index() const noexcept { return std::max({device, time, lat, lon}); }

ResolvedSchema resolve_schema(const ColumnSchema& schema, std::string_view header_line) {
  const auto header = split_fields(header_line, schema.delimiter);
  ResolvedSchema rs;
  rs.delimiter = schema.delimiter;
  rs.device = resolve_column(schema.device, header, "device");
  rs.time = resolve_column(schema.time, header, "time");
  rs.lat = resolve_column(schema.lat, header, "lat");
  rs.lon = resolve_column(schema.lon, header, "lon");
  return rs;
}

ResolvedSchema resolve_schema(const ColumnSchema& schema) {
  if (schema.uses_names()) throw ConfigError("named schema columns require a header line");
  return resolve_schema(schema, std::string_view{});
}

std::vector<std::string_view> split_fields(std::string_view line, char delimiter) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  const std::size_t n = line.size();
  while (true) {
    if (i < n && line[i] == '"') {
      const std::size_t close = line.find('"', i + 1);
      if (close != std::string_view::npos) {
        out.push_back(line.substr(i + 1, close - i - 1));
        std::size_t next = line.find(delimiter, close + 1);
        if (next == std::string_view::npos) break;
        i = next + 1;
        continue;
      }
    }
    const std::size_t next = line.find(delimiter, i);
    if (next == std::string_view::npos) {
      out.push_back(line.substr(i));
      break;
    }
    out.push_back(line.substr(i, next - i));
    i = next + 1;
  }
  return out;
}

Ping parse_ping_record(std::string_view line, const ResolvedSchema& schema, std::uint64_t line_no) {
  if (trim(line).empty()) throw RecordError(line_no, "empty record");
  const auto fields = split_fields(line, schema.delimiter);
  auto field = [&](std::size_t idx, const char* what) -> std::string_view {
    if (idx >= fields.size() || trim(fields[idx]).empty()) {
      throw RecordError(line_no, std::string("missing ") + what);
    }
    return trim(fields[idx]);
  };
  auto number = [&](std::size_t idx, const char* what) {
    const std::string_view f = field(idx, what);
    const auto v = parse_double(f);
    if (!v) throw RecordError(line_no, std::string("unparseable ") + what + " '" + std::string(f) + "'");
    return *v;
  };

  Ping p;
  p.device_id = std::string(field(schema.device, "device id"));
  double t = number(schema.time, "timestamp");
  if (!std::isfinite(t) || t < 0.0) throw RecordError(line_no, "timestamp must be finite and >= 0");
  if (t > kMillisecondThreshold) t /= 1000.0;
  p.t = t;
  const double lat = number(schema.lat, "latitude");
  const double lon = number(schema.lon, "longitude");
  try {
    p.loc = LatLon::checked(lat, lon);
  } catch (const InputDomainError& e) {
    throw RecordError(line_no, e.what());
  }
  p.seq = line_no;
  return p;
}

// ---------------------------------------------------------------------------

namespace {

struct Group {
  std::string device_id;
  std::vector<Ping> pings;
  std::vector<std::string> raw;
};

class Grouper {
 public:
  void add(Ping p, std::string raw, bool keep_raw) {
    auto [it, inserted] = index_.try_emplace(p.device_id, groups_.size());
    if (inserted) groups_.push_back(Group{p.device_id, {}, {}});
    Group& g = groups_[it->second];
    g.pings.push_back(std::move(p));
    if (keep_raw) g.raw.push_back(std::move(raw));
  }
  std::deque<Group> take() {
    index_.clear();
    std::deque<Group> out(std::make_move_iterator(groups_.begin()), std::make_move_iterator(groups_.end()));
    groups_.clear();
    return out;
  }

 private:
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<Group> groups_;
};

DeviceBatch finish(Group g, bool keep_raw) {
  DeviceBatch batch;
  batch.duplicates = canonicalize(g.pings, keep_raw ? &g.raw : nullptr);
  batch.trace.device_id = std::move(g.device_id);
  batch.trace.pings = std::move(g.pings);
  batch.raw_lines = std::move(g.raw);
  return batch;
}

}  // namespace

struct DeviceStream::Impl {
  std::string path;
  ColumnSchema schema;
  StreamOptions options;
  ResolvedSchema resolved;
  std::string header;
  bool has_header = false;
  ErrorSummary summary;
  GroupingMode mode = GroupingMode::kStreaming;

  std::optional<LineReader> reader;
  std::uint64_t line_no = 0;
  std::optional<Group> open_group;

  std::deque<Group> ready;

  std::vector<std::filesystem::path> buckets;
  std::size_t next_bucket = 0;

  ~Impl() {
    for (const auto& b : buckets) {
      std::error_code ec;
      std::filesystem::remove(b, ec);
    }
  }

  void record_error(const RecordError& e) {
    ++summary.skipped;
    if (summary.samples.size() < options.max_error_samples) summary.samples.push_back(e.what());
  }

  // Parses one data line; nullopt (and counted) on failure.
  std::optional<Ping> parse(std::string_view line, std::uint64_t no) {
    ++summary.total_records;
    try {
      Ping p = parse_ping_record(line, resolved, no);
      ++summary.parsed;
      return p;
    } catch (const RecordError& e) {
      record_error(e);
      return std::nullopt;
    }
  }

  void detect_header(LineReader& r) {
    std::string first;
    if (!r.next(first)) {
      resolved = schema.uses_names() ? ResolvedSchema{} : resolve_schema(schema);
      return;
    }
    bool is_header = false;
    switch (schema.header) {
      case HeaderMode::kPresent:
        is_header = true;
        break;
      case HeaderMode::kAbsent:
        is_header = false;
        break;
      case HeaderMode::kAuto:
        if (schema.uses_names()) {
          is_header = true;
        } else {
          const ResolvedSchema rs = resolve_schema(schema);
          const auto fields = split_fields(first, schema.delimiter);
          // a header names both columns; a broken record rarely garbles both
          auto label = [&](std::size_t i) {
            return i < fields.size() && !trim(fields[i]).empty() && !parse_double(trim(fields[i]));
          };
          is_header = label(rs.time) && label(rs.lat);
        }
        break;
    }
    if (is_header) {
      has_header = true;
      header = first;
      resolved = resolve_schema(schema, header);
    } else {
      if (schema.uses_names()) throw ConfigError("named schema columns require a header line");
      resolved = resolve_schema(schema);
    }
  }

  // Opens a fresh reader positioned after the header.
  LineReader open_data() {
    LineReader r(path);
    line_no = 0;
    if (has_header) {
      std::string skip;
      r.next(skip);
      line_no = 1;
    }
    return r;
  }

  struct Scan {
    bool contiguous = true;
    std::uint64_t records = 0;
  };

  Scan scan_contiguity() {
    Scan scan;
    LineReader r = open_data();
    std::string line;
    std::string current;
    std::unordered_set<std::string> closed;
    while (r.next(line)) {
      ++scan.records;
      if (!scan.contiguous) continue;
      const auto fields = split_fields(line, resolved.delimiter);
      if (resolved.device >= fields.size()) continue;
      const std::string_view dev = trim(fields[resolved.device]);
      if (dev.empty() || dev == current) continue;
      if (!current.empty()) closed.insert(current);
      if (closed.count(std::string(dev)) != 0) scan.contiguous = false;
      current = std::string(dev);
    }
    return scan;
  }

  void init() {
    {
      LineReader r(path);
      detect_header(r);
    }
    const Scan scan = scan_contiguity();
    if (scan.contiguous) {
      mode = GroupingMode::kStreaming;
      reader.emplace(open_data());
    } else if (scan.records <= options.in_memory_limit) {
      mode = GroupingMode::kInMemory;
      load_in_memory();
    } else {
      mode = GroupingMode::kSpill;
      spill();
    }
  }

  void load_in_memory() {
    LineReader r = open_data();
    Grouper grouper;
    std::string line;
    while (r.next(line)) {
      ++line_no;
      if (auto p = parse(line, line_no)) grouper.add(std::move(*p), line, options.keep_raw_lines);
    }
    ready = grouper.take();
  }

  void spill() {
    static std::atomic<unsigned> counter{0};
    const std::string stem = "gpsosc-spill-" + std::to_string(std::hash<std::string>{}(path)) + "-" +
                             std::to_string(counter++);
    std::vector<std::unique_ptr<LineWriter>> writers;
    for (std::size_t b = 0; b < options.spill_buckets; ++b) {
      buckets.push_back(options.spill_dir / (stem + "-" + std::to_string(b) + ".tsv"));
      writers.push_back(std::make_unique<LineWriter>(buckets.back().string()));
    }
    LineReader r = open_data();
    std::string line;
    std::string rec;
    while (r.next(line)) {
      ++line_no;
      auto p = parse(line, line_no);
      if (!p) continue;
      const std::size_t b = std::hash<std::string>{}(p->device_id) % options.spill_buckets;
      rec.clear();
      rec += std::to_string(line_no);
      rec += '\t';
      rec += line;
      writers[b]->write_line(rec);
    }
    for (auto& w : writers) w->close();
  }

  bool load_next_bucket() {
    while (next_bucket < buckets.size()) {
      const auto bucket = buckets[next_bucket++];
      Grouper grouper;
      {
        LineReader r(bucket.string());
        std::string line;
        while (r.next(line)) {
          const auto tab = line.find('\t');
          std::uint64_t no = 0;
          std::from_chars(line.data(), line.data() + tab, no);
          std::string_view raw = std::string_view(line).substr(tab + 1);
          // re-parse cannot fail: the record already passed validation once
          Ping p = parse_ping_record(raw, resolved, no);
          grouper.add(std::move(p), std::string(raw), options.keep_raw_lines);
        }
      }
      std::error_code ec;
      std::filesystem::remove(bucket, ec);
      ready = grouper.take();
      if (!ready.empty()) return true;
    }
    return false;
  }

  std::optional<DeviceBatch> next_streaming() {
    std::string line;
    while (reader->next(line)) {
      ++line_no;
      auto p = parse(line, line_no);
      if (!p) continue;
      if (open_group && open_group->device_id != p->device_id) {
        Group done = std::move(*open_group);
        open_group = Group{p->device_id, {}, {}};
        open_group->pings.push_back(std::move(*p));
        if (options.keep_raw_lines) open_group->raw.push_back(line);
        return finish(std::move(done), options.keep_raw_lines);
      }
      if (!open_group) open_group = Group{p->device_id, {}, {}};
      open_group->pings.push_back(std::move(*p));
      if (options.keep_raw_lines) open_group->raw.push_back(line);
    }
    if (open_group) {
      Group done = std::move(*open_group);
      open_group.reset();
      return finish(std::move(done), options.keep_raw_lines);
    }
    return std::nullopt;
  }

  std::optional<DeviceBatch> next() {
    if (mode == GroupingMode::kStreaming) return next_streaming();
    if (ready.empty() && !(mode == GroupingMode::kSpill && load_next_bucket())) return std::nullopt;
    Group g = std::move(ready.front());
    ready.pop_front();
    return finish(std::move(g), options.keep_raw_lines);
  }
};

DeviceStream::DeviceStream(std::string path, ColumnSchema schema, StreamOptions options)
    : impl_(std::make_unique<Impl>()) {
  impl_->path = std::move(path);
  impl_->schema = std::move(schema);
  impl_->options = std::move(options);
  if (impl_->options.spill_buckets == 0) impl_->options.spill_buckets = 1;
  impl_->init();
}

DeviceStream::~DeviceStream() = default;

std::optional<DeviceBatch> DeviceStream::next() { return impl_->next(); }
const std::string& DeviceStream::header_line() const noexcept { return impl_->header; }
const ErrorSummary& DeviceStream::summary() const noexcept { return impl_->summary; }
GroupingMode DeviceStream::mode() const noexcept { return impl_->mode; }

std::vector<Trace> read_traces(const std::string& path, const ColumnSchema& schema, ErrorSummary* summary) {
  StreamOptions opts;
  opts.keep_raw_lines = false;
  DeviceStream stream(path, schema, opts);
  std::vector<Trace> out;
  while (auto batch = stream.next()) out.push_back(std::move(batch->trace));
  if (summary != nullptr) *summary = stream.summary();
  return out;
}

}  // namespace gpsosc
