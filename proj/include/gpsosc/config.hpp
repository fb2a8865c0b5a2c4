// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace gpsosc {

namespace units {
inline constexpr double kMeter = 1.0;
inline constexpr double kKilometer = 1000.0;
inline constexpr double kMile = 1609.344;
inline constexpr double kFoot = 0.3048;
inline constexpr double kSecond = 1.0;
inline constexpr double kMinute = 60.0;
inline constexpr double kHour = 3600.0;
inline constexpr double kMph = kMile / kHour;  // 0.44704 m/s
inline constexpr double kKmh = kKilometer / kHour;
}  // namespace units

/// 2 * dist_c / v_max in seconds, snapped to microsecond resolution so the
/// round-trip window compares cleanly against whole-second timestamps.
/// Throws ConfigError unless both inputs are positive.
double derive_t_min(double dist_c_m, double v_max_mps);

/// Every detection threshold, stored in SI units (meters, seconds, m/s).
struct DetectionConfig {
  int precision = 7;                              // geohash level
  double dist_c = 0.5 * units::kMile;             // community growth distance
  double v_max = 120.0 * units::kMph;             // max ground speed incl. detour
  std::optional<double> t_min_override;           // otherwise derived from dist_c / v_max
  double dist_g = 5.0 * units::kMile;             // far-jump distance
  double t_g = 2.5 * units::kMinute;              // far-jump time window
  double v_pair = 155.0 * units::kMph;            // triangle speed bound, used squared
  double tri_ratio = 0.25;                        // triangle closure ratio
  std::size_t freq_min = 5;                       // stable community frequency
  double dwell_min = 300.0;                       // stable community duration
  double detour_factor = 1.3;                     // documents v_max = 155 mph / 1.3
  double t_floor = 1.0;                           // speed denominator floor
  int max_passes = 10;

  double t_min() const;

  /// Throws ConfigError when a value is out of its domain.
  void validate() const;

  /// Sets a field from text. Values may carry a unit suffix ("0.5mi",
  /// "155mph", "2.5min", "300s"); bare numbers are SI. Throws ConfigError on
  /// unknown keys, malformed numbers or units of the wrong dimension.
  void set(std::string_view key, std::string_view value);

  /// Field value in SI units (counts as plain numbers).
  double get(std::string_view key) const;

  /// Field names accepted by set() and get().
  static std::span<const std::string_view> keys();

  /// (key, value) pairs in mile/mph/minute units, e.g. ("dist_g", "5mi").
  std::vector<std::pair<std::string, std::string>> echo() const;
};

/// Reads `key = value` lines ('#' starts a comment) over the defaults.
DetectionConfig load_config(const std::string& path);
DetectionConfig parse_config(std::string_view text, DetectionConfig base = {});

}  // namespace gpsosc
