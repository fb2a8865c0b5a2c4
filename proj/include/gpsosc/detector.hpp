// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "gpsosc/communities.hpp"
#include "gpsosc/config.hpp"
#include "gpsosc/trace.hpp"

namespace gpsosc {

enum class Heuristic { kH1a, kH1b, kH2a, kH2b };

/// "H1a", "H1b", "H2a" or "H2b".
std::string_view heuristic_name(Heuristic h) noexcept;

struct LabeledRemoval {
  Ping ping;
  Heuristic heuristic = Heuristic::kH1a;
  int pass = 1;
};

struct DetectionResult {
  Trace cleaned;
  std::vector<LabeledRemoval> removals;
  int passes_run = 0;
  bool converged = false;
};

/// Community structure of one trace as seen by a single detection pass.
struct PassSnapshot {
  CommunitySequence seq;
  ZoneSet stable_zones;
  std::vector<std::size_t> community_of;  // zoned index -> community index
};

PassSnapshot make_snapshot(const Trace& trace, const DetectionConfig& cfg);

/// A community the community-level heuristics may never flag: stable, or
/// made only of stable zones.
bool is_immune(const Community& c, const ZoneSet& stable_zones);

// Each heuristic returns sorted indices into seq.zoned.

/// Round trip: from a stable zone and back to the same zone within t_min;
/// in-between sightings outside stable zones are flagged.
std::vector<std::size_t> heuristic_1a(const CommunitySequence& seq, const ZoneSet& stable_zones,
                                      const DetectionConfig& cfg);

/// Far jump: adjacent zone runs, one stable and one not, whose cell centers
/// are more than dist_g apart and whose boundary sightings are less than t_g
/// apart; the unstable run is flagged.
std::vector<std::size_t> heuristic_1b(const CommunitySequence& seq, const ZoneSet& stable_zones,
                                      const DetectionConfig& cfg);

/// v(prev,mid) * v(mid,next) > v_pair^2 and
/// d(prev,next) < tri_ratio * min(d(prev,mid), d(mid,next)). Strict.
bool heuristic_2a_condition(const Community& prev, const Community& mid, const Community& next,
                            const DetectionConfig& cfg);

/// satisfied[k] is the triangle condition for communities (k, k+1, k+2).
std::vector<bool> satisfied_triples(const CommunitySequence& seq, const DetectionConfig& cfg);

/// Inclusive community range of a run of at least two overlapping satisfied
/// triples.
struct Chain {
  std::size_t first = 0;
  std::size_t last = 0;
};

std::vector<Chain> find_chains(const std::vector<bool>& satisfied);

/// Lone satisfied triples outside any chain flag their middle community.
std::vector<std::size_t> heuristic_2a(const CommunitySequence& seq, const DetectionConfig& cfg);
std::vector<std::size_t> heuristic_2a(const CommunitySequence& seq, const ZoneSet& stable_zones,
                                      const std::vector<bool>& satisfied);

/// In each chain, the odd- or even-position group with the strictly lower
/// mean dwell is flagged; on a tie the even group goes.
std::vector<std::size_t> heuristic_2b(const CommunitySequence& seq, const DetectionConfig& cfg);
std::vector<std::size_t> heuristic_2b(const CommunitySequence& seq, const ZoneSet& stable_zones,
                                      const std::vector<bool>& satisfied);

struct PassOutcome {
  std::vector<LabeledRemoval> removals;
  std::vector<std::size_t> removed_indices;  // into trace.pings, ascending
};

/// One pass: snapshot, then H1a, H1b, H2b, H2a on that snapshot. A ping
/// keeps the label of the first heuristic that flagged it.
PassOutcome run_pass(const Trace& trace, const DetectionConfig& cfg, int pass_number = 1);

/// Repeats run_pass until a pass removes nothing or max_passes is reached.
DetectionResult detect(const Trace& trace, const DetectionConfig& cfg);

}  // namespace gpsosc
