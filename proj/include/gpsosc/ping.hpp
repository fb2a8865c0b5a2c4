// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>

#include "gpsosc/geo.hpp"

namespace gpsosc {

/// One GPS sighting.
struct Ping {
  std::string device_id;
  double t = 0.0;  // epoch seconds, may be fractional
  LatLon loc;
  std::uint64_t seq = 0;  // source line number, used to break timestamp ties

  friend bool operator==(const Ping&, const Ping&) = default;
};

inline constexpr double kDefaultTimeFloor = 1.0;

/// Speed in m/s from `a` to `b`. The elapsed time is clamped below at
/// `t_floor` so duplicate timestamps give a finite speed. Throws
/// OrderingError when b precedes a.
double segment_speed(const Ping& a, const Ping& b, double t_floor = kDefaultTimeFloor);

}  // namespace gpsosc
