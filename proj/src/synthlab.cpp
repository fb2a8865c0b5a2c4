// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpsosc/synthlab.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "gpsosc/error.hpp"
#include "gpsosc/pipeline.hpp"
#include "gpsosc/textio.hpp"

namespace gpsosc::synth {

using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Rng

std::uint64_t Rng::derive(std::uint64_t seed, std::uint64_t index) noexcept {
  std::uint64_t x = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double Rng::uniform() noexcept { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

double Rng::uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

std::size_t Rng::index(std::size_t n) noexcept {
  if (n == 0) return 0;
  return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
}

double Rng::normal() noexcept {
  if (spare_normal_) {
    const double v = *spare_normal_;
    spare_normal_.reset();
    return v;
  }
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_normal_ = r * std::sin(theta);
  return r * std::cos(theta);
}

// ---------------------------------------------------------------------------
// Templates

std::string_view kind_name(TemplateKind k) noexcept {
  switch (k) {
    case TemplateKind::kRoundTripJump:
      return "round_trip_jump";
    case TemplateKind::kFarJump:
      return "far_jump";
    case TemplateKind::kTriangleJump:
      return "triangle_jump";
    case TemplateKind::kAlternatingChain:
      return "alternating_chain";
  }
  return "?";
}

TemplateKind parse_kind(std::string_view name) {
  for (auto k : {TemplateKind::kRoundTripJump, TemplateKind::kFarJump, TemplateKind::kTriangleJump,
                 TemplateKind::kAlternatingChain}) {
    if (kind_name(k) == name) return k;
  }
  throw ConfigError("unknown oscillation template kind '" + std::string(name) + "'");
}

namespace {

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::optional<std::string> check_template(const OscillationTemplate& tpl, const DetectionConfig& cfg) {
  const std::string who = std::string(kind_name(tpl.kind)) + (tpl.id.empty() ? "" : " '" + tpl.id + "'");
  auto fail = [&](const std::string& what) -> std::optional<std::string> { return who + ": " + what; };

  if (tpl.pings < 1) return fail("pings must be >= 1");
  if (static_cast<std::size_t>(tpl.pings) >= cfg.freq_min) {
    return fail("pings " + std::to_string(tpl.pings) + " >= freq_min " + std::to_string(cfg.freq_min) +
                " would make the spurious community stable");
  }
  if (!(tpl.gap_s > 0.0)) return fail("gap_s must be > 0");
  if (tpl.dwell_s < 0.0) return fail("dwell_s must be >= 0");

  switch (tpl.kind) {
    case TemplateKind::kRoundTripJump:
      if (!(tpl.jump_m > cfg.dist_c)) {
        return fail("H1a requires jump_m > dist_c (" + num(tpl.jump_m) + " <= " + num(cfg.dist_c) + " m)");
      }
      if (!(tpl.gap_s <= cfg.t_min())) {
        return fail("H1a requires return gap <= t_min (" + num(tpl.gap_s) + " > " + num(cfg.t_min()) + " s)");
      }
      break;
    case TemplateKind::kFarJump:
      if (!(tpl.jump_m > cfg.dist_g)) {
        return fail("H1b requires jump_m > dist_g (" + num(tpl.jump_m) + " <= " + num(cfg.dist_g) + " m)");
      }
      if (!(tpl.gap_s < cfg.t_g)) {
        return fail("H1b requires gap < t_g (" + num(tpl.gap_s) + " >= " + num(cfg.t_g) + " s)");
      }
      break;
    case TemplateKind::kTriangleJump:
    case TemplateKind::kAlternatingChain: {
      if (!(tpl.jump_m > cfg.dist_c)) {
        return fail("H2a requires jump_m > dist_c (" + num(tpl.jump_m) + " <= " + num(cfg.dist_c) + " m)");
      }
      const double v = tpl.jump_m / std::max(tpl.gap_s, cfg.t_floor);
      if (!(v * v > cfg.v_pair * cfg.v_pair)) {
        return fail("H2a requires v12 * v23 > v_pair^2 (" + num(v * v) + " <= " + num(cfg.v_pair * cfg.v_pair) +
                    " m2/s2)");
      }
      if (!(tpl.dwell_s < cfg.dwell_min)) {
        return fail("dwell_s " + num(tpl.dwell_s) + " >= dwell_min would make the spurious community stable");
      }
      if (tpl.kind == TemplateKind::kAlternatingChain) {
        if (tpl.chain_length < 2) return fail("H2b requires chain_length >= 2 spurious communities");
        if (tpl.separation < 1) return fail("separation must be >= 1");
      }
      break;
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Scenario parsing

namespace {

double get_num(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_number()) throw ConfigError(std::string("scenario field '") + key + "' must be a number");
  return j.at(key).get<double>();
}

LatLon get_latlon(const json& j, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string("scenario field '") + key + "' is required");
  const json& p = j.at(key);
  try {
    return LatLon::checked(get_num(p, "lat", 0.0), get_num(p, "lon", 0.0));
  } catch (const InputDomainError& e) {
    throw ConfigError(std::string("scenario field '") + key + "': " + e.what());
  }
}

OscillationTemplate parse_template(const json& j) {
  OscillationTemplate t;
  if (!j.contains("kind")) throw ConfigError("injection without 'kind'");
  t.kind = parse_kind(j.at("kind").get<std::string>());
  t.id = j.value("id", std::string{});
  t.jump_m = get_num(j, "jump_m", 0.0);
  t.gap_s = get_num(j, "gap_s", 0.0);
  t.pings = static_cast<int>(get_num(j, "pings", 1));
  t.dwell_s = get_num(j, "dwell_s", 0.0);
  t.chain_length = static_cast<int>(get_num(j, "chain_length", 0));
  t.separation = static_cast<int>(get_num(j, "separation", 3));
  t.segment = static_cast<std::size_t>(get_num(j, "segment", 0));
  if (j.contains("at_s")) t.at_s = get_num(j, "at_s", 0.0);
  return t;
}

std::pair<double, double> get_range(const json& j, const char* key, std::pair<double, double> fallback) {
  if (!j.contains(key)) return fallback;
  const json& r = j.at(key);
  if (!r.is_array() || r.size() != 2) throw ConfigError(std::string("scenario field '") + key + "' must be [lo, hi]");
  return {r[0].get<double>(), r[1].get<double>()};
}

}  // namespace

ScenarioSpec parse_scenario(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed scenario JSON: ") + e.what());
  }
  ScenarioSpec spec;
  try {
    spec.seed = j.value("seed", std::uint64_t{1});
    if (j.contains("config")) {
      for (const auto& [key, value] : j.at("config").items()) {
        spec.config.set(key, value.is_string() ? value.get<std::string>() : value.dump());
      }
      spec.config.validate();
    }
    if (j.contains("population")) {
      const json& p = j.at("population");
      PopulationSpec pop;
      pop.device_count = p.value("device_count", pop.device_count);
      pop.pings_per_device = p.value("pings_per_device", pop.pings_per_device);
      pop.injections_per_device = p.value("injections_per_device", pop.injections_per_device);
      if (p.contains("kinds")) {
        pop.kinds.clear();
        for (const auto& k : p.at("kinds")) pop.kinds.push_back(parse_kind(k.get<std::string>()));
      }
      if (p.contains("region")) {
        const json& r = p.at("region");
        pop.lat_min = get_num(r, "lat_min", pop.lat_min);
        pop.lat_max = get_num(r, "lat_max", pop.lat_max);
        pop.lon_min = get_num(r, "lon_min", pop.lon_min);
        pop.lon_max = get_num(r, "lon_max", pop.lon_max);
      }
      pop.jitter_m = get_num(p, "jitter_m", pop.jitter_m);
      if (p.contains("dwell_intervals_s")) pop.dwell_intervals_s = p.at("dwell_intervals_s").get<std::vector<double>>();
      std::tie(pop.dwell_minutes_min, pop.dwell_minutes_max) =
          get_range(p, "dwell_minutes", {pop.dwell_minutes_min, pop.dwell_minutes_max});
      std::tie(pop.travel_speed_min, pop.travel_speed_max) =
          get_range(p, "travel_speed_mps", {pop.travel_speed_min, pop.travel_speed_max});
      pop.travel_interval_s = get_num(p, "travel_interval_s", pop.travel_interval_s);
      std::tie(pop.trip_km_min, pop.trip_km_max) = get_range(p, "trip_km", {pop.trip_km_min, pop.trip_km_max});
      pop.start_time = get_num(p, "start_time", pop.start_time);
      if (pop.dwell_intervals_s.empty()) throw ConfigError("dwell_intervals_s must not be empty");
      if (pop.kinds.empty()) throw ConfigError("kinds must not be empty");
      spec.population = pop;
    }
    if (j.contains("devices")) {
      for (const json& d : j.at("devices")) {
        DeviceSchedule dev;
        dev.device_id = d.value("id", "dev" + std::to_string(spec.devices.size()));
        dev.start = get_latlon(d, "start");
        dev.start_time = get_num(d, "start_time", dev.start_time);
        for (const json& s : d.value("segments", json::array())) {
          if (s.contains("dwell")) {
            const json& w = s.at("dwell");
            DwellSegment seg;
            seg.duration_s = get_num(w, "duration_s", seg.duration_s);
            seg.interval_s = get_num(w, "interval_s", seg.interval_s);
            seg.jitter_m = get_num(w, "jitter_m", seg.jitter_m);
            if (!(seg.duration_s >= 0.0) || !(seg.interval_s > 0.0) || !(seg.jitter_m >= 0.0)) {
              throw ConfigError("dwell segment needs duration_s >= 0, interval_s > 0, jitter_m >= 0");
            }
            dev.segments.emplace_back(seg);
          } else if (s.contains("travel")) {
            const json& w = s.at("travel");
            TravelSegment seg;
            seg.to = get_latlon(w, "to");
            seg.speed_mps = get_num(w, "speed_mps", seg.speed_mps);
            seg.interval_s = get_num(w, "interval_s", seg.interval_s);
            seg.jitter_m = get_num(w, "jitter_m", seg.jitter_m);
            if (!(seg.speed_mps > 0.0) || !(seg.interval_s > 0.0) || !(seg.jitter_m >= 0.0)) {
              throw ConfigError("travel segment needs speed_mps > 0, interval_s > 0, jitter_m >= 0");
            }
            dev.segments.emplace_back(seg);
          } else {
            throw ConfigError("segment must be {\"dwell\": ...} or {\"travel\": ...}");
          }
        }
        for (const json& inj : d.value("injections", json::array())) dev.injections.push_back(parse_template(inj));
        spec.devices.push_back(std::move(dev));
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("invalid scenario: ") + e.what());
  }
  return spec;
}

ScenarioSpec load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open scenario '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

// ---------------------------------------------------------------------------
// Generation

namespace {

struct GenPing {
  double t = 0.0;
  LatLon loc;
  int segment = -1;
  int tpl = -1;  // index into the device's template list when spurious
};

struct SegmentInfo {
  bool dwell = false;
  double interval = 0.0;
  double jitter = 0.0;
  LatLon center;  // dwell location
};

double quantize(double v, const char* format) {
  char buf[64];
  std::snprintf(buf, sizeof buf, format, v);
  return std::strtod(buf, nullptr);
}

void quantize(GenPing& p) {
  p.t = quantize(p.t, "%.3f");
  p.loc.lat = quantize(p.loc.lat, "%.7f");
  p.loc.lon = quantize(p.loc.lon, "%.7f");
  if (p.loc.lon >= 180.0) p.loc.lon -= 360.0;
}

LatLon offset(const LatLon& p, double east_m, double north_m) {
  const double dlat = north_m / kEarthRadiusM * 180.0 / std::numbers::pi;
  const double dlon =
      east_m / (kEarthRadiusM * std::cos(p.lat * std::numbers::pi / 180.0)) * 180.0 / std::numbers::pi;
  double lat = std::clamp(p.lat + dlat, -90.0, 90.0);
  double lon = p.lon + dlon;
  if (lon >= 180.0) lon -= 360.0;
  if (lon < -180.0) lon += 360.0;
  return LatLon{lat, lon};
}

LatLon jitter(Rng& rng, const LatLon& p, double sigma) {
  if (sigma <= 0.0) return p;
  const double e = rng.normal() * sigma;
  const double n = rng.normal() * sigma;
  return offset(p, e, n);
}

struct DeviceBuild {
  std::string id;
  std::vector<GenPing> pings;
  std::vector<SegmentInfo> segments;
};

DeviceBuild realize_schedule(const DeviceSchedule& dev, Rng& rng) {
  DeviceBuild b;
  b.id = dev.device_id;
  LatLon pos = dev.start;
  double t_next = dev.start_time;
  std::optional<double> t_last;
  for (std::size_t s = 0; s < dev.segments.size(); ++s) {
    const int seg = static_cast<int>(s);
    if (const auto* d = std::get_if<DwellSegment>(&dev.segments[s])) {
      b.segments.push_back(SegmentInfo{true, d->interval_s, d->jitter_m, pos});
      const auto n = static_cast<std::size_t>(std::floor(d->duration_s / d->interval_s)) + 1;
      double t0 = t_next;
      if (t_last && t0 <= *t_last) t0 = *t_last + d->interval_s;
      for (std::size_t i = 0; i < n; ++i) {
        GenPing p{t0 + static_cast<double>(i) * d->interval_s, jitter(rng, pos, d->jitter_m), seg, -1};
        quantize(p);
        b.pings.push_back(p);
      }
      t_last = b.pings.back().t;
      t_next = *t_last + d->interval_s;
    } else {
      const auto& tr = std::get<TravelSegment>(dev.segments[s]);
      b.segments.push_back(SegmentInfo{false, tr.interval_s, tr.jitter_m, tr.to});
      const double dist = great_circle_distance(pos, tr.to);
      const double dur = dist / tr.speed_mps;
      const double t0 = t_last ? *t_last : t_next;
      for (double dt = tr.interval_s; dt < dur; dt += tr.interval_s) {
        const double f = dt / dur;
        const LatLon on_path{pos.lat + (tr.to.lat - pos.lat) * f, pos.lon + (tr.to.lon - pos.lon) * f};
        GenPing p{t0 + dt, jitter(rng, on_path, tr.jitter_m), seg, -1};
        quantize(p);
        b.pings.push_back(p);
        t_last = b.pings.back().t;
      }
      t_next = t0 + std::max(dur, tr.interval_s);
      pos = tr.to;
    }
  }
  return b;
}

Trace to_trace(const std::string& id, const std::vector<GenPing>& pings) {
  Trace t;
  t.device_id = id;
  t.pings.reserve(pings.size());
  for (std::size_t i = 0; i < pings.size(); ++i) t.pings.push_back(Ping{id, pings[i].t, pings[i].loc, i});
  return t;
}

/// Independent evaluation of the triangle inequalities from community
/// summaries: centroid distances and boundary time gaps.
struct TriangleCheck {
  bool fast = false;
  bool folded = false;
};

TriangleCheck triangle(const Community& a, const Community& b, const Community& c, const DetectionConfig& cfg) {
  const double d_ab = great_circle_distance(a.centroid, b.centroid);
  const double d_bc = great_circle_distance(b.centroid, c.centroid);
  const double d_ac = great_circle_distance(a.centroid, c.centroid);
  const double t_ab = std::max(b.t_first - a.t_last, cfg.t_floor);
  const double t_bc = std::max(c.t_first - b.t_last, cfg.t_floor);
  TriangleCheck r;
  r.fast = (d_ab / t_ab) * (d_bc / t_bc) > cfg.v_pair * cfg.v_pair;
  r.folded = d_ac < cfg.tri_ratio * std::min(d_ab, d_bc);
  return r;
}

std::vector<std::size_t> members_of(const std::vector<GenPing>& pings, int tpl) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < pings.size(); ++i) {
    if (pings[i].tpl == tpl) out.push_back(i);
  }
  return out;
}

/// Verifies a realized template on the device's current trace.
std::optional<std::string> verify(const std::vector<GenPing>& pings, const std::string& device_id,
                                  const OscillationTemplate& tpl, int tpl_index, const DetectionConfig& cfg) {
  const std::vector<std::size_t> idx = members_of(pings, tpl_index);
  const std::string who = std::string(kind_name(tpl.kind)) + " '" + tpl.id + "'";
  if (idx.empty()) return who + ": no sightings realized";
  const PassSnapshot snap = make_snapshot(to_trace(device_id, pings), cfg);
  const auto& z = snap.seq.zoned;
  auto stable_zone = [&](std::size_t i) { return snap.stable_zones.count(z[i].zone) != 0; };
  for (std::size_t i : idx) {
    if (stable_zone(i)) return who + ": spurious sighting lies in a stable zone";
  }

  switch (tpl.kind) {
    case TemplateKind::kRoundTripJump: {
      if (idx.front() == 0 || idx.back() + 1 >= z.size()) return who + ": needs sightings on both sides";
      const std::size_t p = idx.front() - 1;
      const std::size_t q = idx.back() + 1;
      if (z[p].zone != z[q].zone) return who + ": H1a requires departure and return in the same zone";
      if (!stable_zone(p)) return who + ": H1a requires the anchor zone to be stable";
      if (!(z[q].ping.t - z[p].ping.t <= cfg.t_min())) return who + ": H1a requires return gap <= t_min";
      for (std::size_t i : idx) {
        if (z[i].zone == z[p].zone) return who + ": spurious sighting shares the anchor zone";
        if (!(great_circle_distance(z[i].ping.loc, z[p].ping.loc) > cfg.dist_c) ||
            !(great_circle_distance(z[i].ping.loc, z[q].ping.loc) > cfg.dist_c)) {
          return who + ": H1a requires the jump to exceed dist_c";
        }
      }
      break;
    }
    case TemplateKind::kFarJump: {
      if (idx.front() == 0) return who + ": needs an anchor sighting";
      const std::size_t a = idx.front() - 1;
      if (!stable_zone(a)) return who + ": H1b requires the anchor zone to be stable";
      if (!(z[idx.front()].ping.t - z[a].ping.t < cfg.t_g)) return who + ": H1b requires gap < t_g";
      const double d =
          great_circle_distance(decode_geohash(z[a].zone).center, decode_geohash(z[idx.front()].zone).center);
      if (!(d > cfg.dist_g)) return who + ": H1b requires zone distance > dist_g";
      for (std::size_t i : idx) {
        if (z[i].zone != z[idx.front()].zone) return who + ": spurious sightings must share one zone";
      }
      break;
    }
    case TemplateKind::kTriangleJump:
    case TemplateKind::kAlternatingChain: {
      // group injected sightings by community
      std::vector<std::size_t> comms;
      for (std::size_t i : idx) {
        const std::size_t c = snap.community_of[i];
        if (comms.empty() || comms.back() != c) comms.push_back(c);
      }
      const std::size_t expected = tpl.kind == TemplateKind::kTriangleJump ? 1 : static_cast<std::size_t>(tpl.chain_length);
      if (comms.size() != expected) return who + ": spurious sightings did not form the expected communities";
      const auto& cs = snap.seq.communities;
      for (std::size_t k = 0; k < comms.size(); ++k) {
        const Community& c = cs[comms[k]];
        if (c.stable || is_immune(c, snap.stable_zones)) return who + ": spurious community is immune";
        for (std::size_t i = c.begin; i < c.end; ++i) {
          if (pings[i].tpl != tpl_index) return who + ": spurious community merged with true sightings";
        }
        if (k > 0 && comms[k] != comms[k - 1] + 2) return who + ": chain is not alternating";
      }
      if (comms.front() == 0 || comms.back() + 1 >= cs.size()) return who + ": needs true communities on both sides";
      const std::size_t first = comms.front() - 1;
      const std::size_t last = comms.back() + 1;
      for (std::size_t k = first; k + 2 <= last; ++k) {
        const TriangleCheck tc = triangle(cs[k], cs[k + 1], cs[k + 2], cfg);
        if (!tc.fast) return who + ": H2a requires v12 * v23 > v_pair^2";
        if (!tc.folded) return who + ": H2a requires d13 < tri_ratio * min(d12, d23)";
      }
      if (tpl.kind == TemplateKind::kAlternatingChain) {
        double odd = 0.0, even = 0.0;
        std::size_t n_odd = 0, n_even = 0;
        for (std::size_t k = first; k <= last; ++k) {
          if ((k - first) % 2 == 0) {
            odd += cs[k].duration;
            ++n_odd;
          } else {
            even += cs[k].duration;
            ++n_even;
          }
        }
        if (!(even / static_cast<double>(n_even) < odd / static_cast<double>(n_odd))) {
          return who + ": H2b requires the spurious group to have the lower mean dwell";
        }
        // the chain must not extend past the true communities on either side
        if (first > 0 && triangle(cs[first - 1], cs[first], cs[first + 1], cfg).fast &&
            triangle(cs[first - 1], cs[first], cs[first + 1], cfg).folded) {
          return who + ": chain extends before its first community";
        }
        if (last + 1 < cs.size() && triangle(cs[last - 1], cs[last], cs[last + 1], cfg).fast &&
            triangle(cs[last - 1], cs[last], cs[last + 1], cfg).folded) {
          return who + ": chain extends past its last community";
        }
      }
      break;
    }
  }
  return std::nullopt;
}

struct Injector {
  DeviceBuild& dev;
  const DetectionConfig& cfg;
  Rng& rng;
  std::vector<LatLon> base;  // original sightings, for keeping jump targets clear

  std::size_t margin() const { return cfg.freq_min + 1; }

  std::pair<std::size_t, std::size_t> segment_range(std::size_t seg) const {
    std::size_t b = dev.pings.size(), e = 0;
    for (std::size_t i = 0; i < dev.pings.size(); ++i) {
      if (dev.pings[i].segment == static_cast<int>(seg) && dev.pings[i].tpl < 0) {
        b = std::min(b, i);
        e = std::max(e, i + 1);
      }
    }
    return {b, e};
  }

  // Candidate positions in [lo, hi), preferred position first then outward.
  std::vector<std::size_t> candidates(std::size_t lo, std::size_t hi, std::optional<std::size_t> prefer) {
    std::vector<std::size_t> out;
    if (lo >= hi) return out;
    const std::size_t start = prefer ? std::clamp(*prefer, lo, hi - 1) : lo + rng.index(hi - lo);
    out.push_back(start);
    for (std::size_t d = 1; d < hi - lo; ++d) {
      if (start + d < hi) out.push_back(start + d);
      if (start >= lo + d) out.push_back(start - d);
    }
    return out;
  }

  std::optional<LatLon> clear_target(const LatLon& center, double distance) {
    const double radius = std::min(2.0 * cfg.dist_c, 0.5 * distance);
    for (int attempt = 0; attempt < 32; ++attempt) {
      const double bearing = rng.uniform(0.0, 2.0 * std::numbers::pi);
      const LatLon target = destination_point(center, bearing, distance);
      if (!target.valid()) continue;
      bool clear = true;
      for (const LatLon& p : base) {
        if (great_circle_distance(p, target) <= radius) {
          clear = false;
          break;
        }
      }
      if (clear) return target;
    }
    return std::nullopt;
  }

  void shift_from(std::size_t k, double delta) {
    for (std::size_t i = k; i < dev.pings.size(); ++i) {
      dev.pings[i].t += delta;
      quantize(dev.pings[i]);
    }
  }

  // Inserts a spurious community before index k, leaving k-1 by `gap_s`.
  void insert_community(std::size_t k, const OscillationTemplate& tpl, int tpl_index, const LatLon& target,
                        double sigma) {
    const double t_anchor = dev.pings[k - 1].t;
    const double spacing = tpl.pings > 1 ? tpl.dwell_s / (tpl.pings - 1) : 0.0;
    std::vector<GenPing> added;
    for (int j = 0; j < tpl.pings; ++j) {
      GenPing p{t_anchor + tpl.gap_s + spacing * j, jitter(rng, target, sigma), dev.pings[k - 1].segment, tpl_index};
      quantize(p);
      added.push_back(p);
    }
    const double resume = added.back().t + tpl.gap_s;
    shift_from(k, resume - dev.pings[k].t);
    dev.pings.insert(dev.pings.begin() + static_cast<std::ptrdiff_t>(k), added.begin(), added.end());
  }

  // Realizes one template; returns the last failure reason on exhaustion.
  std::optional<std::string> inject(const OscillationTemplate& tpl, int tpl_index) {
    if (tpl.segment >= dev.segments.size() || !dev.segments[tpl.segment].dwell) {
      return std::string(kind_name(tpl.kind)) + " '" + tpl.id + "': target segment " + std::to_string(tpl.segment) +
             " is not a dwell segment";
    }
    const SegmentInfo& seg = dev.segments[tpl.segment];
    const auto [b, e] = segment_range(tpl.segment);
    const std::size_t m = margin();
    std::size_t need = 1;
    if (tpl.kind == TemplateKind::kRoundTripJump || tpl.kind == TemplateKind::kFarJump) {
      need = static_cast<std::size_t>(tpl.pings);
    } else if (tpl.kind == TemplateKind::kAlternatingChain) {
      need = static_cast<std::size_t>((tpl.chain_length - 1) * tpl.separation + 1);
    }
    const std::string who = std::string(kind_name(tpl.kind)) + " '" + tpl.id + "'";
    if (b >= e || e - b < 2 * m + need) return who + ": dwell segment too short for the injection";
    const std::size_t lo = b + m;
    const std::size_t hi = e - m - need + 1;
    std::optional<std::size_t> prefer;
    if (tpl.at_s) {
      const double target_t = dev.pings[b].t + *tpl.at_s;
      std::size_t best = lo;
      for (std::size_t i = lo; i < hi; ++i) {
        if (std::abs(dev.pings[i].t - target_t) < std::abs(dev.pings[best].t - target_t)) best = i;
      }
      prefer = best;
    }

    std::string last_failure = who + ": no eligible position in the dwell segment";
    const double sigma = seg.jitter;
    int tried = 0;
    for (std::size_t k : candidates(lo, hi, prefer)) {
      if (++tried > 48) break;
      // cheap timing screens before touching the trace
      if (tpl.kind == TemplateKind::kRoundTripJump) {
        const double gap = dev.pings[k + need].t - dev.pings[k - 1].t;
        if (gap > tpl.gap_s || gap > cfg.t_min()) {
          last_failure = who + ": H1a requires return gap <= t_min; sightings too sparse";
          continue;
        }
        if (encode_geohash(dev.pings[k - 1].loc, cfg.precision) != encode_geohash(dev.pings[k + need].loc, cfg.precision)) {
          last_failure = who + ": H1a requires departure and return in the same zone";
          continue;
        }
      } else if (tpl.kind == TemplateKind::kFarJump) {
        const double gap = dev.pings[k].t - dev.pings[k - 1].t;
        if (gap > tpl.gap_s || !(gap < cfg.t_g)) {
          last_failure = who + ": H1b requires gap < t_g; sightings too sparse";
          continue;
        }
      }
      const auto target = clear_target(seg.center, tpl.jump_m);
      if (!target) {
        last_failure = who + ": no jump target clear of the device's own sightings";
        continue;
      }

      const std::vector<GenPing> saved = dev.pings;
      switch (tpl.kind) {
        case TemplateKind::kRoundTripJump:
        case TemplateKind::kFarJump:
          for (std::size_t i = k; i < k + need; ++i) {
            dev.pings[i].loc = jitter(rng, *target, sigma);
            dev.pings[i].tpl = tpl_index;
            quantize(dev.pings[i]);
          }
          break;
        case TemplateKind::kTriangleJump:
          insert_community(k, tpl, tpl_index, *target, sigma);
          break;
        case TemplateKind::kAlternatingChain:
          for (int c = tpl.chain_length - 1; c >= 0; --c) {
            insert_community(k + static_cast<std::size_t>(c * tpl.separation), tpl, tpl_index, *target, sigma);
          }
          break;
      }
      if (auto bad = verify(dev.pings, dev.id, tpl, tpl_index, cfg)) {
        last_failure = *bad;
        dev.pings = saved;
        continue;
      }
      return std::nullopt;
    }
    return last_failure;
  }
};

DeviceSchedule population_device(const PopulationSpec& pop, const DetectionConfig& cfg, std::size_t d, Rng& rng) {
  DeviceSchedule dev;
  char id[32];
  std::snprintf(id, sizeof id, "dev%04zu", d);
  dev.device_id = id;
  dev.start = LatLon{rng.uniform(pop.lat_min, pop.lat_max), rng.uniform(pop.lon_min, pop.lon_max)};
  dev.start_time = std::floor(pop.start_time + rng.uniform(0.0, 3600.0));

  const std::size_t min_dwell = 2 * (cfg.freq_min + 1) + 16;
  const std::size_t dwell_cap = std::max(min_dwell, pop.pings_per_device / 4);
  std::size_t budget = pop.pings_per_device;
  LatLon pos = dev.start;
  bool dwell_next = true;
  while (budget > 0) {
    if (dwell_next) {
      const double interval = pop.dwell_intervals_s[rng.index(pop.dwell_intervals_s.size())];
      const double minutes = rng.uniform(pop.dwell_minutes_min, pop.dwell_minutes_max);
      auto n = static_cast<std::size_t>(std::floor(minutes * 60.0 / interval)) + 1;
      n = std::clamp(n, std::min(min_dwell, budget), std::min(dwell_cap, budget));
      dev.segments.emplace_back(DwellSegment{static_cast<double>(n - 1) * interval, interval, pop.jitter_m});
      budget -= n;
    } else {
      TravelSegment tr;
      for (int attempt = 0; attempt < 16; ++attempt) {
        tr.to = destination_point(pos, rng.uniform(0.0, 2.0 * std::numbers::pi),
                                  rng.uniform(pop.trip_km_min, pop.trip_km_max) * 1000.0);
        const bool inside = tr.to.lat >= pop.lat_min && tr.to.lat <= pop.lat_max && tr.to.lon >= pop.lon_min &&
                            tr.to.lon <= pop.lon_max;
        if (inside) break;
      }
      tr.speed_mps = rng.uniform(pop.travel_speed_min, pop.travel_speed_max);
      tr.interval_s = pop.travel_interval_s;
      tr.jitter_m = pop.jitter_m;
      const double dur = great_circle_distance(pos, tr.to) / tr.speed_mps;
      const auto n = static_cast<std::size_t>(std::max(0.0, std::ceil(dur / tr.interval_s) - 1.0));
      if (n >= budget) {
        // finish with a dwell instead of a truncated trip
        dwell_next = true;
        continue;
      }
      budget -= n;
      pos = tr.to;
      dev.segments.emplace_back(tr);
    }
    dwell_next = !dwell_next;
  }
  return dev;
}

OscillationTemplate population_template(TemplateKind kind, const DetectionConfig& cfg, Rng& rng) {
  OscillationTemplate t;
  t.kind = kind;
  switch (kind) {
    case TemplateKind::kRoundTripJump:
      t.jump_m = cfg.dist_c * rng.uniform(1.3, 3.0);
      t.gap_s = cfg.t_min();
      t.pings = 1;
      break;
    case TemplateKind::kFarJump:
      t.jump_m = cfg.dist_g * rng.uniform(1.3, 2.0);
      t.gap_s = 0.8 * cfg.t_g;
      t.pings = 1;
      break;
    case TemplateKind::kTriangleJump:
      t.gap_s = 20.0;
      t.jump_m = std::max(cfg.dist_c * 2.5, cfg.v_pair * t.gap_s * rng.uniform(1.5, 3.0));
      t.pings = 2;
      t.dwell_s = 5.0;
      break;
    case TemplateKind::kAlternatingChain:
      t.gap_s = 30.0;
      t.jump_m = std::max(cfg.dist_c * 2.5, cfg.v_pair * t.gap_s * rng.uniform(1.5, 2.5));
      t.pings = 1 + static_cast<int>(rng.index(2));
      t.dwell_s = t.pings > 1 ? 4.0 : 0.0;
      t.chain_length = 2 + static_cast<int>(rng.index(3));
      t.separation = 3;
      break;
  }
  t.pings = std::min<int>(t.pings, static_cast<int>(std::max<std::size_t>(cfg.freq_min, 2) - 1));
  return t;
}

// Can `seg` host `tpl` at all (size and sighting interval)?
bool eligible(const Segment& seg, const OscillationTemplate& tpl, const DetectionConfig& cfg) {
  const auto* d = std::get_if<DwellSegment>(&seg);
  if (d == nullptr) return false;
  const auto n = static_cast<std::size_t>(std::floor(d->duration_s / d->interval_s)) + 1;
  std::size_t need = 1;
  if (tpl.kind == TemplateKind::kAlternatingChain) need = static_cast<std::size_t>((tpl.chain_length - 1) * tpl.separation + 1);
  if (n < 2 * (cfg.freq_min + 1) + need + 4) return false;
  if (tpl.kind == TemplateKind::kRoundTripJump) {
    return d->interval_s * (tpl.pings + 1) <= std::min(tpl.gap_s, cfg.t_min());
  }
  if (tpl.kind == TemplateKind::kFarJump) return d->interval_s <= tpl.gap_s && d->interval_s < cfg.t_g;
  return true;
}

struct DeviceOutput {
  std::string id;
  std::vector<GenPing> pings;
  std::vector<OscillationTemplate> templates;  // realized ones
  std::vector<std::string> template_ids;       // by schedule index
};

DeviceOutput build_device(const DeviceSchedule& schedule, const DetectionConfig& cfg, Rng& rng, bool strict) {
  DeviceBuild dev = realize_schedule(schedule, rng);
  Injector inj{dev, cfg, rng, {}};
  inj.base.reserve(dev.pings.size());
  for (const auto& p : dev.pings) inj.base.push_back(p.loc);

  std::vector<OscillationTemplate> templates = schedule.injections;
  for (std::size_t i = 0; i < templates.size(); ++i) {
    if (templates[i].id.empty()) templates[i].id = schedule.device_id + "/" + std::to_string(i);
    if (auto bad = check_template(templates[i], cfg)) throw GenerationError(*bad);
  }
  // latest segment first so insertions never move a pending target
  std::vector<std::size_t> order(templates.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return templates[a].segment > templates[b].segment; });

  std::vector<OscillationTemplate> realized;
  std::vector<int> realized_index(templates.size(), -1);
  for (std::size_t i : order) {
    const std::vector<GenPing> saved = dev.pings;
    std::optional<std::string> bad = inj.inject(templates[i], static_cast<int>(i));
    // a new injection must not disturb the ones already in place
    for (std::size_t j = 0; !bad && j < templates.size(); ++j) {
      if (realized_index[j] >= 0) bad = verify(dev.pings, dev.id, templates[j], static_cast<int>(j), cfg);
    }
    if (bad) {
      if (strict) throw GenerationError(*bad);
      dev.pings = saved;
      continue;
    }
    realized_index[i] = static_cast<int>(i);
  }
  for (std::size_t i = 0; i < templates.size(); ++i) {
    if (realized_index[i] < 0) continue;
    if (auto bad = verify(dev.pings, dev.id, templates[i], static_cast<int>(i), cfg)) throw GenerationError(*bad);
    realized.push_back(templates[i]);
  }
  std::vector<std::string> ids;
  for (const auto& t : templates) ids.push_back(t.id);
  return DeviceOutput{dev.id, std::move(dev.pings), std::move(realized), std::move(ids)};
}

}  // namespace

Scenario generate(const ScenarioSpec& spec) {
  const DetectionConfig& cfg = spec.config;
  cfg.validate();
  std::vector<DeviceOutput> outputs;

  std::size_t stream = 0;
  for (const DeviceSchedule& dev : spec.devices) {
    Rng rng(Rng::derive(spec.seed, stream++));
    outputs.push_back(build_device(dev, cfg, rng, true));
  }

  if (spec.population) {
    const PopulationSpec& pop = *spec.population;
    std::size_t kind_counter = 0;
    for (std::size_t d = 0; d < pop.device_count; ++d) {
      Rng rng(Rng::derive(spec.seed, stream++));
      DeviceSchedule dev = population_device(pop, cfg, d, rng);
      std::vector<bool> used(dev.segments.size(), false);
      for (std::size_t k = 0; k < pop.injections_per_device; ++k) {
        for (std::size_t attempt = 0; attempt < pop.kinds.size(); ++attempt) {
          const TemplateKind kind = pop.kinds[(kind_counter + attempt) % pop.kinds.size()];
          OscillationTemplate tpl = population_template(kind, cfg, rng);
          std::vector<std::size_t> options;
          for (std::size_t s = 0; s < dev.segments.size(); ++s) {
            if (!used[s] && eligible(dev.segments[s], tpl, cfg)) options.push_back(s);
          }
          if (options.empty()) continue;
          tpl.segment = options[rng.index(options.size())];
          used[tpl.segment] = true;
          dev.injections.push_back(tpl);
          break;
        }
        ++kind_counter;
      }
      outputs.push_back(build_device(dev, cfg, rng, false));
    }
  }

  Scenario sc;
  std::uint64_t line = 2;  // line 1 is the header
  for (DeviceOutput& out : outputs) {
    Trace trace;
    trace.device_id = out.id;
    for (const GenPing& p : out.pings) {
      trace.pings.push_back(Ping{out.id, p.t, p.loc, line});
      TruthLabel label;
      label.seq = line;
      label.device_id = out.id;
      label.t = p.t;
      label.oscillation = p.tpl >= 0;
      if (p.tpl >= 0) label.template_id = out.template_ids[static_cast<std::size_t>(p.tpl)];
      sc.truth.labels.push_back(std::move(label));
      ++line;
    }
    sc.traces.push_back(std::move(trace));
    for (auto& tpl : out.templates) sc.injected.push_back(tpl);
  }
  return sc;
}

// ---------------------------------------------------------------------------
// Files

namespace {

std::string format_time(double t) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f", t);
  std::string s = buf;
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  return s;
}

std::string format_coord(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.7f", v);
  return buf;
}

}  // namespace

std::string trace_csv(const Scenario& scenario) {
  std::string out = "device_id,timestamp,lat,lon\n";
  for (const Trace& t : scenario.traces) {
    for (const Ping& p : t.pings) {
      out += p.device_id;
      out += ',';
      out += format_time(p.t);
      out += ',';
      out += format_coord(p.loc.lat);
      out += ',';
      out += format_coord(p.loc.lon);
      out += '\n';
    }
  }
  return out;
}

std::string truth_csv(const Scenario& scenario) {
  std::string out = "line,device_id,timestamp,is_oscillation,template_id\n";
  for (const TruthLabel& l : scenario.truth.labels) {
    out += std::to_string(l.seq);
    out += ',';
    out += l.device_id;
    out += ',';
    out += format_time(l.t);
    out += ',';
    out += l.oscillation ? '1' : '0';
    out += ',';
    out += l.template_id;
    out += '\n';
  }
  return out;
}

void write_scenario(const Scenario& scenario, const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory '" + dir + "': " + ec.message());
  const auto base = std::filesystem::path(dir);
  {
    LineWriter w((base / "traces.csv").string());
    w.write(trace_csv(scenario));
    w.close();
  }
  {
    LineWriter w((base / "truth.csv").string());
    w.write(truth_csv(scenario));
    w.close();
  }
}

GroundTruth load_truth(const std::string& path) {
  LineReader r(path);
  GroundTruth truth;
  std::string line;
  std::uint64_t no = 0;
  while (r.next(line)) {
    ++no;
    if (no == 1 && line.rfind("line", 0) == 0) continue;
    if (line.empty()) continue;
    const auto f = split_fields(line, ',');
    if (f.size() < 4) throw ParseError(path + ":" + std::to_string(no) + ": truth row needs at least 4 columns");
    TruthLabel l;
    try {
      l.seq = std::stoull(std::string(f[0]));
      l.device_id = std::string(f[1]);
      l.t = std::stod(std::string(f[2]));
    } catch (const std::exception&) {
      throw ParseError(path + ":" + std::to_string(no) + ": malformed truth row");
    }
    l.oscillation = f[3] == "1" || f[3] == "true";
    if (f.size() > 4) l.template_id = std::string(f[4]);
    truth.labels.push_back(std::move(l));
  }
  std::sort(truth.labels.begin(), truth.labels.end(), [](const auto& a, const auto& b) { return a.seq < b.seq; });
  return truth;
}

const TruthLabel* GroundTruth::find(std::uint64_t seq) const {
  const auto it = std::lower_bound(labels.begin(), labels.end(), seq,
                                   [](const TruthLabel& l, std::uint64_t s) { return l.seq < s; });
  return it != labels.end() && it->seq == seq ? &*it : nullptr;
}

std::size_t GroundTruth::positives() const {
  return static_cast<std::size_t>(std::count_if(labels.begin(), labels.end(), [](const auto& l) { return l.oscillation; }));
}

// ---------------------------------------------------------------------------
// Scoring

Score score_removed(const std::vector<std::uint64_t>& universe, const std::vector<std::uint64_t>& removed,
                    const GroundTruth& truth) {
  if (universe.size() != truth.labels.size()) {
    throw ContractError("score: ping universe has " + std::to_string(universe.size()) + " pings, truth has " +
                        std::to_string(truth.labels.size()));
  }
  std::unordered_set<std::uint64_t> seen;
  seen.reserve(universe.size());
  for (std::uint64_t s : universe) {
    if (!truth.find(s) || !seen.insert(s).second) {
      throw ContractError("score: ping " + std::to_string(s) + " is not in the truth set");
    }
  }
  std::unordered_set<std::uint64_t> gone(removed.begin(), removed.end());
  for (std::uint64_t s : gone) {
    if (seen.count(s) == 0) throw ContractError("score: removed ping " + std::to_string(s) + " outside the universe");
  }

  Score sc;
  for (const TruthLabel& l : truth.labels) {
    const bool r = gone.count(l.seq) != 0;
    if (l.oscillation) {
      (r ? sc.tp : sc.fn)++;
    } else {
      (r ? sc.fp : sc.tn)++;
    }
  }
  sc.precision = sc.tp + sc.fp == 0 ? 1.0 : static_cast<double>(sc.tp) / static_cast<double>(sc.tp + sc.fp);
  sc.recall = sc.tp + sc.fn == 0 ? 1.0 : static_cast<double>(sc.tp) / static_cast<double>(sc.tp + sc.fn);
  sc.f1 = sc.precision + sc.recall == 0.0 || sc.tp == 0 ? 0.0 : 2.0 * sc.precision * sc.recall / (sc.precision + sc.recall);
  const std::size_t normals = sc.fp + sc.tn;
  sc.data_loss_rate = normals == 0 ? 0.0 : static_cast<double>(sc.fp) / static_cast<double>(normals);
  return sc;
}

Score score(const std::vector<DetectionResult>& results, const GroundTruth& truth) {
  std::vector<std::uint64_t> universe;
  std::vector<std::uint64_t> removed;
  for (const DetectionResult& r : results) {
    for (const Ping& p : r.cleaned.pings) universe.push_back(p.seq);
    for (const LabeledRemoval& rm : r.removals) {
      universe.push_back(rm.ping.seq);
      removed.push_back(rm.ping.seq);
    }
  }
  return score_removed(universe, removed, truth);
}

std::vector<std::uint64_t> speed_filter(const Trace& trace, double v_limit, double t_floor) {
  std::vector<std::uint64_t> out;
  for (std::size_t i = 1; i < trace.pings.size(); ++i) {
    if (segment_speed(trace.pings[i - 1], trace.pings[i], t_floor) > v_limit) out.push_back(trace.pings[i].seq);
  }
  return out;
}

Score score_speed_baseline(const std::vector<Trace>& traces, const GroundTruth& truth, double v_limit, double t_floor) {
  std::vector<std::uint64_t> universe;
  std::vector<std::uint64_t> removed;
  for (const Trace& t : traces) {
    for (const Ping& p : t.pings) universe.push_back(p.seq);
    const auto r = speed_filter(t, v_limit, t_floor);
    removed.insert(removed.end(), r.begin(), r.end());
  }
  return score_removed(universe, removed, truth);
}

std::vector<SweepRow> sweep(const std::vector<Trace>& traces, const GroundTruth& truth, const DetectionConfig& base,
                            std::string_view param, const std::vector<std::string>& grid, unsigned workers) {
  base.get(param);  // rejects unknown names even for an empty grid
  std::vector<SweepRow> rows;
  for (const std::string& value : grid) {
    DetectionConfig cfg = base;
    cfg.set(param, value);
    cfg.validate();
    const auto results = detect_all(traces, cfg, workers);
    SweepRow row;
    row.value = value;
    row.si_value = cfg.get(param);
    for (const auto& r : results) row.removals += r.removals.size();
    row.score = score(results, truth);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string sweep_table(std::string_view param, const std::vector<SweepRow>& rows) {
  std::ostringstream os;
  char buf[160];
  std::snprintf(buf, sizeof buf, "%-14s %10s %10s %10s %10s\n", std::string(param).c_str(), "removals", "precision",
                "recall", "f1");
  os << buf;
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%-14s %10zu %10.4f %10.4f %10.4f\n", r.value.c_str(), r.removals,
                  r.score.precision, r.score.recall, r.score.f1);
    os << buf;
  }
  return os.str();
}

std::string sweep_json(std::string_view param, const std::vector<SweepRow>& rows) {
  nlohmann::ordered_json j;
  j["param"] = std::string(param);
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    j["rows"].push_back({{"value", r.value},
                         {"si_value", r.si_value},
                         {"removals", r.removals},
                         {"precision", r.score.precision},
                         {"recall", r.score.recall},
                         {"f1", r.score.f1},
                         {"data_loss_rate", r.score.data_loss_rate}});
  }
  return j.dump(2);
}

}  // namespace gpsosc::synth
