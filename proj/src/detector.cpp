// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpsosc/detector.hpp"

#include <algorithm>
#include <optional>

namespace gpsosc {
namespace {

void append_members(const Community& c, std::vector<std::size_t>& out) {
  for (std::size_t i = c.begin; i < c.end; ++i) out.push_back(i);
}

std::vector<std::size_t> sorted_unique(std::vector<std::size_t> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

// Marks every triple that lies inside some chain.
std::vector<bool> chained_triples(const std::vector<bool>& satisfied) {
  std::vector<bool> in_chain(satisfied.size(), false);
  for (const Chain& ch : find_chains(satisfied)) {
    for (std::size_t k = ch.first; k + 2 <= ch.last; ++k) in_chain[k] = true;
  }
  return in_chain;
}

}  // namespace

std::string_view heuristic_name(Heuristic h) noexcept {
  switch (h) {
    case Heuristic::kH1a:
      return "H1a";
    case Heuristic::kH1b:
      return "H1b";
    case Heuristic::kH2a:
      return "H2a";
    case Heuristic::kH2b:
      return "H2b";
  }
  return "?";
}

PassSnapshot make_snapshot(const Trace& trace, const DetectionConfig& cfg) {
  PassSnapshot snap;
  snap.seq = build_communities(project_trace(trace, cfg.precision), cfg.dist_c);
  classify_communities(snap.seq, cfg.freq_min, cfg.dwell_min);
  snap.stable_zones = stable_zone_set(snap.seq);
  snap.community_of.resize(snap.seq.zoned.size());
  for (std::size_t c = 0; c < snap.seq.communities.size(); ++c) {
    const Community& com = snap.seq.communities[c];
    for (std::size_t i = com.begin; i < com.end; ++i) snap.community_of[i] = c;
  }
  return snap;
}

bool is_immune(const Community& c, const ZoneSet& stable_zones) {
  if (c.stable) return true;
  return std::all_of(c.zones.begin(), c.zones.end(), [&](const ZoneId& z) { return stable_zones.count(z) != 0; });
}

std::vector<std::size_t> heuristic_1a(const CommunitySequence& seq, const ZoneSet& stable_zones,
                                      const DetectionConfig& cfg) {
  const auto& z = seq.zoned;
  const double t_min = cfg.t_min();
  std::vector<std::size_t> out;
  std::vector<bool> is_stable(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) is_stable[i] = stable_zones.count(z[i].zone) != 0;

  for (std::size_t i = 0; i < z.size(); ++i) {
    if (!is_stable[i]) continue;
    // furthest return to the same zone inside the window
    std::size_t last_return = i;
    for (std::size_t j = i + 1; j < z.size() && z[j].ping.t - z[i].ping.t <= t_min; ++j) {
      if (z[j].zone == z[i].zone) last_return = j;
    }
    for (std::size_t k = i + 1; k < last_return; ++k) {
      if (z[k].zone != z[i].zone && !is_stable[k]) out.push_back(k);
    }
  }
  return sorted_unique(std::move(out));
}

std::vector<std::size_t> heuristic_1b(const CommunitySequence& seq, const ZoneSet& stable_zones,
                                      const DetectionConfig& cfg) {
  const auto& z = seq.zoned;
  struct Run {
    std::size_t begin;
    std::size_t end;
    bool stable;
  };
  std::vector<Run> runs;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (runs.empty() || z[runs.back().begin].zone != z[i].zone) {
      runs.push_back(Run{i, i + 1, stable_zones.count(z[i].zone) != 0});
    } else {
      runs.back().end = i + 1;
    }
  }

  std::vector<std::size_t> out;
  for (std::size_t r = 0; r + 1 < runs.size(); ++r) {
    const Run& a = runs[r];
    const Run& b = runs[r + 1];
    if (a.stable == b.stable) continue;
    const double gap = z[b.begin].ping.t - z[a.end - 1].ping.t;
    if (!(gap < cfg.t_g)) continue;
    const double dist = great_circle_distance(decode_geohash(z[a.begin].zone).center,
                                              decode_geohash(z[b.begin].zone).center);
    if (!(dist > cfg.dist_g)) continue;
    const Run& unstable = a.stable ? b : a;
    for (std::size_t i = unstable.begin; i < unstable.end; ++i) out.push_back(i);
  }
  return sorted_unique(std::move(out));
}

bool heuristic_2a_condition(const Community& prev, const Community& mid, const Community& next,
                            const DetectionConfig& cfg) {
  const Kinematics first = community_kinematics(prev, mid, cfg.t_floor);
  const Kinematics second = community_kinematics(mid, next, cfg.t_floor);
  const double closure = community_kinematics(prev, next, cfg.t_floor).distance;
  const bool fast = first.speed * second.speed > cfg.v_pair * cfg.v_pair;
  const bool folded = closure < cfg.tri_ratio * std::min(first.distance, second.distance);
  return fast && folded;
}

std::vector<bool> satisfied_triples(const CommunitySequence& seq, const DetectionConfig& cfg) {
  const auto& cs = seq.communities;
  if (cs.size() < 3) return {};
  std::vector<bool> sat(cs.size() - 2);
  for (std::size_t k = 0; k + 2 < cs.size(); ++k) sat[k] = heuristic_2a_condition(cs[k], cs[k + 1], cs[k + 2], cfg);
  return sat;
}

std::vector<Chain> find_chains(const std::vector<bool>& satisfied) {
  std::vector<Chain> chains;
  std::size_t k = 0;
  while (k < satisfied.size()) {
    if (!satisfied[k]) {
      ++k;
      continue;
    }
    std::size_t end = k;
    while (end + 1 < satisfied.size() && satisfied[end + 1]) ++end;
    if (end > k) chains.push_back(Chain{k, end + 2});
    k = end + 1;
  }
  return chains;
}

std::vector<std::size_t> heuristic_2a(const CommunitySequence& seq, const ZoneSet& stable_zones,
                                      const std::vector<bool>& satisfied) {
  const std::vector<bool> in_chain = chained_triples(satisfied);
  std::vector<std::size_t> out;
  for (std::size_t k = 0; k < satisfied.size(); ++k) {
    if (!satisfied[k] || in_chain[k]) continue;
    const Community& mid = seq.communities[k + 1];
    if (!is_immune(mid, stable_zones)) append_members(mid, out);
  }
  return sorted_unique(std::move(out));
}

std::vector<std::size_t> heuristic_2a(const CommunitySequence& seq, const DetectionConfig& cfg) {
  return heuristic_2a(seq, stable_zone_set(seq), satisfied_triples(seq, cfg));
}

std::vector<std::size_t> heuristic_2b(const CommunitySequence& seq, const ZoneSet& stable_zones,
                                      const std::vector<bool>& satisfied) {
  std::vector<std::size_t> out;
  for (const Chain& ch : find_chains(satisfied)) {
    double odd_sum = 0.0, even_sum = 0.0;
    std::size_t odd_n = 0, even_n = 0;
    for (std::size_t c = ch.first; c <= ch.last; ++c) {
      // position 1 is the chain's first community
      if ((c - ch.first) % 2 == 0) {
        odd_sum += seq.communities[c].duration;
        ++odd_n;
      } else {
        even_sum += seq.communities[c].duration;
        ++even_n;
      }
    }
    const double odd_mean = odd_sum / static_cast<double>(odd_n);
    const double even_mean = even_sum / static_cast<double>(even_n);
    const std::size_t drop_parity = odd_mean < even_mean ? 0 : 1;
    for (std::size_t c = ch.first; c <= ch.last; ++c) {
      if ((c - ch.first) % 2 != drop_parity) continue;
      const Community& com = seq.communities[c];
      if (!is_immune(com, stable_zones)) append_members(com, out);
    }
  }
  return sorted_unique(std::move(out));
}

std::vector<std::size_t> heuristic_2b(const CommunitySequence& seq, const DetectionConfig& cfg) {
  return heuristic_2b(seq, stable_zone_set(seq), satisfied_triples(seq, cfg));
}

PassOutcome run_pass(const Trace& trace, const DetectionConfig& cfg, int pass_number) {
  const PassSnapshot snap = make_snapshot(trace, cfg);
  const auto& seq = snap.seq;
  std::vector<std::optional<Heuristic>> label(seq.zoned.size());
  auto apply = [&](const std::vector<std::size_t>& flagged, Heuristic h) {
    for (std::size_t i : flagged) {
      if (!label[i]) label[i] = h;
    }
  };

  apply(heuristic_1a(seq, snap.stable_zones, cfg), Heuristic::kH1a);
  apply(heuristic_1b(seq, snap.stable_zones, cfg), Heuristic::kH1b);
  const std::vector<bool> sat = satisfied_triples(seq, cfg);
  apply(heuristic_2b(seq, snap.stable_zones, sat), Heuristic::kH2b);
  apply(heuristic_2a(seq, snap.stable_zones, sat), Heuristic::kH2a);

  PassOutcome outcome;
  for (std::size_t i = 0; i < label.size(); ++i) {
    if (!label[i]) continue;
    // pings of stable communities are never removed within a pass
    if (seq.communities[snap.community_of[i]].stable) continue;
    outcome.removed_indices.push_back(i);
    outcome.removals.push_back(LabeledRemoval{trace.pings[i], *label[i], pass_number});
  }
  return outcome;
}

DetectionResult detect(const Trace& trace, const DetectionConfig& cfg) {
  cfg.validate();
  DetectionResult result;
  result.cleaned = trace;
  for (int pass = 1; pass <= cfg.max_passes; ++pass) {
    PassOutcome outcome = run_pass(result.cleaned, cfg, pass);
    result.passes_run = pass;
    if (outcome.removed_indices.empty()) {
      result.converged = true;
      break;
    }
    std::vector<Ping> kept;
    kept.reserve(result.cleaned.pings.size() - outcome.removed_indices.size());
    std::size_t r = 0;
    for (std::size_t i = 0; i < result.cleaned.pings.size(); ++i) {
      if (r < outcome.removed_indices.size() && outcome.removed_indices[r] == i) {
        ++r;
        continue;
      }
      kept.push_back(std::move(result.cleaned.pings[i]));
    }
    result.cleaned.pings = std::move(kept);
    for (auto& rm : outcome.removals) result.removals.push_back(std::move(rm));
  }
  return result;
}

}  // namespace gpsosc
