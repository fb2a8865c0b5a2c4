// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "gpsosc/config.hpp"
#include "gpsosc/detector.hpp"
#include "gpsosc/geo.hpp"
#include "gpsosc/trace.hpp"

namespace gpsosc::synth {

/// Portable random source: std::mt19937_64 (bit-exact by the standard)
/// with hand-written uniform and Box-Muller normal draws, so a seed gives
/// the same stream with any standard library.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Seed for stream `index` of a scenario (splitmix64 of seed and index).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t index) noexcept;

  double uniform() noexcept;  // [0, 1)
  double uniform(double lo, double hi) noexcept;
  std::size_t index(std::size_t n) noexcept;  // [0, n)
  double normal() noexcept;

 private:
  std::mt19937_64 engine_;
  std::optional<double> spare_normal_;
};

enum class TemplateKind { kRoundTripJump, kFarJump, kTriangleJump, kAlternatingChain };

std::string_view kind_name(TemplateKind k) noexcept;  // "round_trip_jump", ...
TemplateKind parse_kind(std::string_view name);

/// An injected oscillation shape.
///
/// RoundTripJump and FarJump overwrite the coordinates of `pings`
/// consecutive sightings inside a dwell. TriangleJump and AlternatingChain
/// insert spurious communities of `pings` sightings spread over `dwell_s`,
/// reached and left in `gap_s` each way (later sightings are shifted in
/// time to make room).
struct OscillationTemplate {
  TemplateKind kind = TemplateKind::kRoundTripJump;
  std::string id;       // assigned "<device>/<n>" when empty
  double jump_m = 0.0;  // distance of the spurious location from the dwell
  /// RoundTripJump: longest allowed anchor-to-return interval.
  /// FarJump: longest allowed anchor-to-jump interval.
  /// TriangleJump / AlternatingChain: duration of each leg.
  double gap_s = 0.0;
  int pings = 1;
  double dwell_s = 0.0;
  int chain_length = 0;  // AlternatingChain: number of spurious communities
  int separation = 3;    // AlternatingChain: true sightings between spurious communities
  std::size_t segment = 0;     // target dwell segment of the device schedule
  std::optional<double> at_s;  // preferred offset into that segment
};

/// Checks the declared template parameters against the heuristic the shape
/// realizes. Returns the violated condition, or nullopt when feasible.
std::optional<std::string> check_template(const OscillationTemplate& tpl, const DetectionConfig& cfg);

struct DwellSegment {
  double duration_s = 1800.0;
  double interval_s = 30.0;
  double jitter_m = 15.0;
};

struct TravelSegment {
  LatLon to;
  double speed_mps = 15.0;
  double interval_s = 60.0;
  double jitter_m = 15.0;
};

using Segment = std::variant<DwellSegment, TravelSegment>;

struct DeviceSchedule {
  std::string device_id;
  LatLon start;
  double start_time = 1.6e9;
  std::vector<Segment> segments;
  std::vector<OscillationTemplate> injections;
};

/// Procedural population: random dwell/travel schedules and injections.
struct PopulationSpec {
  std::size_t device_count = 10;
  std::size_t pings_per_device = 1000;
  std::size_t injections_per_device = 2;
  std::vector<TemplateKind> kinds{TemplateKind::kRoundTripJump, TemplateKind::kFarJump, TemplateKind::kTriangleJump,
                                  TemplateKind::kAlternatingChain};
  double lat_min = 38.80, lat_max = 39.10;
  double lon_min = -77.20, lon_max = -76.80;
  double jitter_m = 15.0;
  std::vector<double> dwell_intervals_s{5.0, 10.0, 15.0, 30.0, 60.0};
  double dwell_minutes_min = 15.0, dwell_minutes_max = 60.0;
  double travel_speed_min = 8.0, travel_speed_max = 25.0;
  double travel_interval_s = 60.0;
  double trip_km_min = 3.0, trip_km_max = 20.0;
  double start_time = 1.6e9;
};

struct ScenarioSpec {
  std::uint64_t seed = 1;
  DetectionConfig config;  // templates are constructed against this
  std::vector<DeviceSchedule> devices;
  std::optional<PopulationSpec> population;
};

/// Reads a JSON scenario (see README for the schema). Throws ConfigError on
/// malformed content and IoError when the file cannot be read.
ScenarioSpec parse_scenario(std::string_view json_text);
ScenarioSpec load_scenario(const std::string& path);

struct TruthLabel {
  std::uint64_t seq = 0;  // line number in the emitted trace file
  std::string device_id;
  double t = 0.0;
  bool oscillation = false;
  std::string template_id;
};

struct GroundTruth {
  std::vector<TruthLabel> labels;  // ascending seq

  const TruthLabel* find(std::uint64_t seq) const;
  std::size_t positives() const;
};

struct Scenario {
  std::vector<Trace> traces;  // seq already set to emitted line numbers
  GroundTruth truth;
  std::vector<OscillationTemplate> injected;
};

/// Deterministic scenario realization. Every injection is verified against
/// its heuristic's inequalities on the final trace; a declared template
/// that cannot hold throws GenerationError naming the violated condition.
Scenario generate(const ScenarioSpec& spec);

/// Writes `traces.csv` (device_id,timestamp,lat,lon) and `truth.csv`
/// (line,device_id,timestamp,is_oscillation,template_id) into `dir`.
void write_scenario(const Scenario& scenario, const std::string& dir);
std::string trace_csv(const Scenario& scenario);
std::string truth_csv(const Scenario& scenario);

GroundTruth load_truth(const std::string& path);

struct Score {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  double precision = 1.0;
  double recall = 1.0;
  double f1 = 0.0;
  double data_loss_rate = 0.0;
};

/// Scores a removal set over a ping universe (seq values). Throws
/// ContractError when the universe differs from the truth's key set.
Score score_removed(const std::vector<std::uint64_t>& universe, const std::vector<std::uint64_t>& removed,
                    const GroundTruth& truth);
Score score(const std::vector<DetectionResult>& results, const GroundTruth& truth);

/// Naive baseline: drops every ping reached from its predecessor faster than
/// `v_limit` m/s. Returns removed seq values.
std::vector<std::uint64_t> speed_filter(const Trace& trace, double v_limit, double t_floor = kDefaultTimeFloor);
Score score_speed_baseline(const std::vector<Trace>& traces, const GroundTruth& truth, double v_limit,
                           double t_floor = kDefaultTimeFloor);

struct SweepRow {
  std::string value;       // grid value as given
  double si_value = 0.0;   // the same in SI units
  std::size_t removals = 0;
  Score score;
};

/// Runs detect for each grid value of `param` over all traces. Throws
/// ConfigError for an unknown parameter or a bad grid value.
std::vector<SweepRow> sweep(const std::vector<Trace>& traces, const GroundTruth& truth, const DetectionConfig& base,
                            std::string_view param, const std::vector<std::string>& grid, unsigned workers = 0);

std::string sweep_table(std::string_view param, const std::vector<SweepRow>& rows);
std::string sweep_json(std::string_view param, const std::vector<SweepRow>& rows);

}  // namespace gpsosc::synth
