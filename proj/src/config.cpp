// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpsosc/config.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "gpsosc/error.hpp"

namespace gpsosc {
namespace {

enum class Dim { kDistance, kSpeed, kTime, kCount, kRatio };

struct FieldInfo {
  std::string_view key;
  Dim dim;
};

constexpr std::array<FieldInfo, 13> kFields{{
    {"precision", Dim::kCount},
    {"dist_c", Dim::kDistance},
    {"v_max", Dim::kSpeed},
    {"t_min", Dim::kTime},
    {"dist_g", Dim::kDistance},
    {"t_g", Dim::kTime},
    {"v_pair", Dim::kSpeed},
    {"tri_ratio", Dim::kRatio},
    {"freq_min", Dim::kCount},
    {"dwell_min", Dim::kTime},
    {"detour_factor", Dim::kRatio},
    {"t_floor", Dim::kTime},
    {"max_passes", Dim::kCount},
}};

constexpr auto kKeys = [] {
  std::array<std::string_view, kFields.size()> keys{};
  for (std::size_t i = 0; i < kFields.size(); ++i) keys[i] = kFields[i].key;
  return keys;
}();

const FieldInfo& field_info(std::string_view key) {
  for (const auto& f : kFields) {
    if (f.key == key) return f;
  }
  throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

double unit_factor(Dim dim, std::string_view unit, std::string_view key) {
  if (unit.empty()) return 1.0;
  switch (dim) {
    case Dim::kDistance:
      if (unit == "m") return units::kMeter;
      if (unit == "km") return units::kKilometer;
      if (unit == "mi") return units::kMile;
      if (unit == "ft") return units::kFoot;
      break;
    case Dim::kSpeed:
      if (unit == "mps" || unit == "m/s") return 1.0;
      if (unit == "kmh" || unit == "km/h" || unit == "kph") return units::kKmh;
      if (unit == "mph") return units::kMph;
      break;
    case Dim::kTime:
      if (unit == "ms") return 0.001;
      if (unit == "s" || unit == "sec") return units::kSecond;
      if (unit == "min") return units::kMinute;
      if (unit == "h" || unit == "hr") return units::kHour;
      break;
    case Dim::kCount:
    case Dim::kRatio:
      break;
  }
  throw ConfigError("unit '" + std::string(unit) + "' is not valid for '" + std::string(key) + "'");
}

double parse_quantity(std::string_view key, std::string_view text) {
  const FieldInfo& info = field_info(key);
  text = trim(text);
  if (text == "inf" || text == "infinity") return std::numeric_limits<double>::infinity();
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr == text.data()) {
    throw ConfigError("malformed value '" + std::string(text) + "' for '" + std::string(key) + "'");
  }
  const std::string_view unit = trim(std::string_view(ptr, static_cast<std::size_t>(text.data() + text.size() - ptr)));
  return value * unit_factor(info.dim, unit, key);
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

int to_int(std::string_view key, double v) {
  if (!std::isfinite(v) || v != std::floor(v) || std::abs(v) > 1e9) {
    throw ConfigError("'" + std::string(key) + "' must be an integer");
  }
  return static_cast<int>(v);
}

}  // namespace

double derive_t_min(double dist_c_m, double v_max_mps) {
  if (!(dist_c_m > 0.0) || !(v_max_mps > 0.0)) throw ConfigError("derive_t_min: dist_c and v_max must be positive");
  const double raw = 2.0 * dist_c_m / v_max_mps;
  if (!std::isfinite(raw)) return raw;
  return std::round(raw * 1e6) / 1e6;
}

double DetectionConfig::t_min() const { return t_min_override ? *t_min_override : derive_t_min(dist_c, v_max); }

void DetectionConfig::validate() const {
  auto positive = [](const char* name, double v) {
    if (!(v > 0.0)) throw ConfigError(std::string(name) + " must be strictly positive");
  };
  if (precision < 1 || precision > 12) throw ConfigError("precision must be in [1, 12]");
  positive("dist_c", dist_c);
  positive("v_max", v_max);
  if (t_min_override) positive("t_min", *t_min_override);
  positive("dist_g", dist_g);
  positive("t_g", t_g);
  positive("v_pair", v_pair);
  if (!(tri_ratio > 0.0 && tri_ratio < 1.0)) throw ConfigError("tri_ratio must be in (0, 1)");
  if (freq_min < 1) throw ConfigError("freq_min must be at least 1");
  positive("dwell_min", dwell_min);
  positive("detour_factor", detour_factor);
  positive("t_floor", t_floor);
  if (max_passes < 1) throw ConfigError("max_passes must be at least 1");
}

void DetectionConfig::set(std::string_view key, std::string_view value) {
  const double v = parse_quantity(key, value);
  if (key == "precision") {
    precision = to_int(key, v);
  } else if (key == "dist_c") {
    dist_c = v;
  } else if (key == "v_max") {
    v_max = v;
  } else if (key == "t_min") {
    t_min_override = v;
  } else if (key == "dist_g") {
    dist_g = v;
  } else if (key == "t_g") {
    t_g = v;
  } else if (key == "v_pair") {
    v_pair = v;
  } else if (key == "tri_ratio") {
    tri_ratio = v;
  } else if (key == "freq_min") {
    if (std::isinf(v) && v > 0) {
      freq_min = std::numeric_limits<std::size_t>::max();
    } else {
      const int n = to_int(key, v);
      if (n < 0) throw ConfigError("freq_min must be nonnegative");
      freq_min = static_cast<std::size_t>(n);
    }
  } else if (key == "dwell_min") {
    dwell_min = v;
  } else if (key == "detour_factor") {
    detour_factor = v;
  } else if (key == "t_floor") {
    t_floor = v;
  } else if (key == "max_passes") {
    max_passes = to_int(key, v);
  }
}

double DetectionConfig::get(std::string_view key) const {
  field_info(key);
  if (key == "precision") return precision;
  if (key == "dist_c") return dist_c;
  if (key == "v_max") return v_max;
  if (key == "t_min") return t_min();
  if (key == "dist_g") return dist_g;
  if (key == "t_g") return t_g;
  if (key == "v_pair") return v_pair;
  if (key == "tri_ratio") return tri_ratio;
  if (key == "freq_min") {
    return freq_min == std::numeric_limits<std::size_t>::max() ? std::numeric_limits<double>::infinity()
                                                               : static_cast<double>(freq_min);
  }
  if (key == "dwell_min") return dwell_min;
  if (key == "detour_factor") return detour_factor;
  if (key == "t_floor") return t_floor;
  return max_passes;
}

std::span<const std::string_view> DetectionConfig::keys() { return kKeys; }

std::vector<std::pair<std::string, std::string>> DetectionConfig::echo() const {
  std::vector<std::pair<std::string, std::string>> out;
  for (const auto& f : kFields) {
    const double v = get(f.key);
    std::string text;
    switch (f.dim) {
      case Dim::kDistance:
        text = fmt(v / units::kMile) + "mi";
        break;
      case Dim::kSpeed:
        text = fmt(v / units::kMph) + "mph";
        break;
      case Dim::kTime:
        text = v >= units::kMinute && f.key == "t_g" ? fmt(v / units::kMinute) + "min" : fmt(v) + "s";
        break;
      case Dim::kCount:
      case Dim::kRatio:
        text = std::isinf(v) ? "inf" : fmt(v);
        break;
    }
    out.emplace_back(std::string(f.key), std::move(text));
  }
  return out;
}

DetectionConfig parse_config(std::string_view text, DetectionConfig base) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    auto sep = line.find('=');
    if (sep == std::string_view::npos) sep = line.find(':');
    if (sep == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    try {
      base.set(trim(line.substr(0, sep)), trim(line.substr(sep + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  base.validate();
  return base;
}

DetectionConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace gpsosc
