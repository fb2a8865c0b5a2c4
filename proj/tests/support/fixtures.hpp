// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <unistd.h>
#include <string>
#include <vector>

#include "gpsosc/geo.hpp"
#include "gpsosc/trace.hpp"

namespace fx {

using gpsosc::LatLon;
using gpsosc::Ping;
using gpsosc::Trace;

// Local tangent-plane offset, good to well under a meter over tens of km.
inline LatLon offset(const LatLon& p, double east_m, double north_m) {
  const double k = 180.0 / (std::numbers::pi * gpsosc::kEarthRadiusM);
  return LatLon{p.lat + north_m * k, p.lon + east_m * k / std::cos(p.lat * std::numbers::pi / 180.0)};
}

inline constexpr LatLon kHome{38.9897, -76.9378};

struct TraceBuilder {
  Trace trace;
  std::uint64_t next_seq = 1;

  explicit TraceBuilder(std::string id = "dev") { trace.device_id = std::move(id); }

  TraceBuilder& at(double t, const LatLon& loc) {
    trace.pings.push_back(Ping{trace.device_id, t, loc, next_seq++});
    return *this;
  }
  // n sightings at `loc`, starting at t0, `step` seconds apart
  TraceBuilder& dwell(double t0, const LatLon& loc, int n, double step) {
    for (int i = 0; i < n; ++i) at(t0 + i * step, loc);
    return *this;
  }
  Trace build() const { return gpsosc::build_trace(trace.pings); }
};

inline std::vector<std::uint64_t> seqs(const std::vector<Ping>& pings) {
  std::vector<std::uint64_t> out;
  for (const auto& p : pings) out.push_back(p.seq);
  return out;
}

// Random trace mixing dwells, travel and jumps of every scale, so every
// heuristic fires somewhere across a sample.
inline Trace random_trace(std::mt19937_64& rng, const std::string& id, std::size_t max_pings = 80) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  TraceBuilder b(id);
  LatLon home = offset(kHome, (u(rng) - 0.5) * 20000, (u(rng) - 0.5) * 20000);
  LatLon pos = home;
  double t = 1.6e9 + std::floor(u(rng) * 1000);
  const auto n = static_cast<std::size_t>(u(rng) * static_cast<double>(max_pings));
  for (std::size_t i = 0; i < n; ++i) {
    const double r = u(rng);
    LatLon loc;
    if (r < 0.55) {
      loc = offset(pos, (u(rng) - 0.5) * 60, (u(rng) - 0.5) * 60);
    } else if (r < 0.7) {
      loc = offset(pos, (u(rng) - 0.5) * 3000, (u(rng) - 0.5) * 3000);  // short hop or oscillation
    } else if (r < 0.8) {
      loc = offset(pos, (u(rng) - 0.5) * 40000, (u(rng) - 0.5) * 40000);  // far jump
    } else if (r < 0.9) {
      pos = offset(pos, (u(rng) - 0.5) * 5000, (u(rng) - 0.5) * 5000);  // move on
      loc = pos;
    } else {
      loc = home;
    }
    // a few equal timestamps, mostly short gaps, some long ones
    const double g = u(rng);
    t += g < 0.05 ? 0.0 : g < 0.8 ? std::floor(u(rng) * 30) + 1 : std::floor(u(rng) * 900);
    b.at(t, loc);
  }
  return b.build();
}

struct TempDir {
  std::filesystem::path path;
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("gpsosc_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) out.push_back(line);
  return out;
}

}  // namespace fx
