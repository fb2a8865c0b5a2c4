// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "gpsosc/geo.hpp"
#include "gpsosc/ping.hpp"
#include "gpsosc/trace.hpp"

namespace gpsosc {

struct ZonedPing {
  Ping ping;
  ZoneId zone;
};

/// One ZonedPing per ping, order preserved.
std::vector<ZonedPing> project_trace(const Trace& trace, int precision);

/// A maximal run of consecutive sightings whose successive gaps are all
/// within the community distance.
struct Community {
  std::size_t begin = 0;  // member range [begin, end) in the zoned sequence
  std::size_t end = 0;
  std::vector<ZoneId> zones;  // sorted, unique
  std::size_t frequency = 0;
  double t_first = 0.0;
  double t_last = 0.0;
  double duration = 0.0;  // t_last - t_first; also the dwell time
  LatLon centroid;        // arithmetic mean of member lat and lon
  bool stable = false;
};

struct CommunitySequence {
  std::string device_id;
  std::vector<ZonedPing> zoned;
  std::vector<Community> communities;

  std::span<const ZonedPing> members(const Community& c) const {
    return std::span<const ZonedPing>(zoned).subspan(c.begin, c.end - c.begin);
  }
};

/// Greedy left-to-right growth: a ping joins the open community when it is
/// at most `dist_c_m` from the previous ping, otherwise it opens a new one.
/// Stability is left unset; see classify_communities.
CommunitySequence build_communities(std::vector<ZonedPing> zoned, double dist_c_m);

/// Stable when the community has at least `freq_min` members or lasts at
/// least `dwell_min_s` seconds.
bool classify_stability(const Community& c, std::size_t freq_min, double dwell_min_s) noexcept;

void classify_communities(CommunitySequence& seq, std::size_t freq_min, double dwell_min_s);

using ZoneSet = std::unordered_set<ZoneId>;

/// Union of the zones of every stable community.
ZoneSet stable_zone_set(const CommunitySequence& seq);

struct Kinematics {
  double distance = 0.0;  // meters, centroid to centroid
  double dt = 0.0;        // seconds, last member of a to first member of b, clamped at t_floor
  double speed = 0.0;     // m/s
};

/// Movement from community `a` to a later community `b`. Throws
/// ContractError when `a` does not precede `b`.
Kinematics community_kinematics(const Community& a, const Community& b, double t_floor = kDefaultTimeFloor);

}  // namespace gpsosc
