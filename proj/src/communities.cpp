// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpsosc/communities.hpp"

#include <algorithm>

#include "gpsosc/error.hpp"

namespace gpsosc {
namespace {

Community summarize(const std::vector<ZonedPing>& zoned, std::size_t begin, std::size_t end) {
  Community c;
  c.begin = begin;
  c.end = end;
  c.frequency = end - begin;
  c.t_first = zoned[begin].ping.t;
  c.t_last = zoned[end - 1].ping.t;
  c.duration = c.t_last - c.t_first;
  double lat_sum = 0.0;
  double lon_sum = 0.0;
  c.zones.reserve(4);
  for (std::size_t i = begin; i < end; ++i) {
    lat_sum += zoned[i].ping.loc.lat;
    lon_sum += zoned[i].ping.loc.lon;
    c.zones.push_back(zoned[i].zone);
  }
  const auto n = static_cast<double>(c.frequency);
  c.centroid = LatLon{lat_sum / n, lon_sum / n};
  std::sort(c.zones.begin(), c.zones.end());
  c.zones.erase(std::unique(c.zones.begin(), c.zones.end()), c.zones.end());
  return c;
}

}  // namespace

std::vector<ZonedPing> project_trace(const Trace& trace, int precision) {
  std::vector<ZonedPing> out;
  out.reserve(trace.pings.size());
  for (const Ping& p : trace.pings) out.push_back(ZonedPing{p, encode_geohash(p.loc, precision)});
  return out;
}

CommunitySequence build_communities(std::vector<ZonedPing> zoned, double dist_c_m) {
  CommunitySequence seq;
  if (!zoned.empty()) seq.device_id = zoned.front().ping.device_id;
  seq.zoned = std::move(zoned);
  const auto& z = seq.zoned;
  std::size_t begin = 0;
  for (std::size_t i = 1; i <= z.size(); ++i) {
    if (i == z.size() || great_circle_distance(z[i - 1].ping.loc, z[i].ping.loc) > dist_c_m) {
      seq.communities.push_back(summarize(z, begin, i));
      begin = i;
    }
  }
  return seq;
}

bool classify_stability(const Community& c, std::size_t freq_min, double dwell_min_s) noexcept {
  return c.frequency >= freq_min || c.duration >= dwell_min_s;
}

void classify_communities(CommunitySequence& seq, std::size_t freq_min, double dwell_min_s) {
  for (Community& c : seq.communities) c.stable = classify_stability(c, freq_min, dwell_min_s);
}

ZoneSet stable_zone_set(const CommunitySequence& seq) {
  ZoneSet out;
  for (const Community& c : seq.communities) {
    if (c.stable) out.insert(c.zones.begin(), c.zones.end());
  }
  return out;
}

Kinematics community_kinematics(const Community& a, const Community& b, double t_floor) {
  if (a.end > b.begin) throw ContractError("community_kinematics: first community must precede the second");
  Kinematics k;
  k.distance = great_circle_distance(a.centroid, b.centroid);
  k.dt = std::max(b.t_first - a.t_last, t_floor);
  k.speed = k.distance / k.dt;
  return k;
}

}  // namespace gpsosc
