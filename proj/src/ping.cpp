// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpsosc/ping.hpp"

#include <algorithm>

#include "gpsosc/error.hpp"

namespace gpsosc {

double segment_speed(const Ping& a, const Ping& b, double t_floor) {
  if (b.t < a.t) {
    throw OrderingError("segment_speed: timestamps out of order (" + std::to_string(a.t) + " > " +
                        std::to_string(b.t) + ")");
  }
  const double dt = std::max(b.t - a.t, t_floor);
  return great_circle_distance(a.loc, b.loc) / dt;
}

}  // namespace gpsosc
