// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <algorithm>

#include <json.hpp>

#include "fixtures.hpp"
#include "gpsosc/error.hpp"
#include "gpsosc/pipeline.hpp"
#include "gpsosc/textio.hpp"

using namespace gpsosc;

namespace {

// Anchor dwell with one round-trip sighting (line 8) and a far jump (line 13).
std::string dirty_device(const std::string& id, double t0 = 1600000000) {
  const LatLon a = fx::kHome;
  const LatLon b = fx::offset(a, 900, 0);
  const LatLon far = fx::offset(a, 0, 10000);
  std::string s;
  auto row = [&](double t, const LatLon& p) {
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s,%.0f,%.7f,%.7f\n", id.c_str(), t0 + t, p.lat, p.lon);
    s += buf;
  };
  for (int i = 0; i < 6; ++i) row(i * 2, a);
  row(20, b);
  row(30, a);
  for (int i = 0; i < 3; ++i) row(40 + i * 2, a);
  row(100, far);
  return s;
}

const std::string kHeader = "device_id,timestamp,lat,lon\n";

}  // namespace

TEST_CASE("worker resolution") {
  CHECK(resolve_workers(3) == 3);
  CHECK(resolve_workers(0) >= 1);
}

TEST_CASE("clean a small file") {
  fx::TempDir dir("clean");
  const std::string in = dir.file("in.csv");
  fx::write_file(in, kHeader + dirty_device("A") + "A,bogus,1,1\n" + dirty_device("B"));
  CleanOptions opts;
  opts.audit = true;
  opts.timing = false;
  const std::string out = dir.file("out.csv");
  const RunReport rep = clean_files({in}, out, opts);

  CHECK(rep.lines == 25);
  CHECK(rep.parsed == 24);
  CHECK(rep.skipped == 1);
  CHECK(rep.devices == 2);
  CHECK(rep.removed == 4);
  CHECK(rep.cleaned == 20);
  CHECK(rep.converged_devices == 2);
  CHECK(rep.removed_by.at("H1a").at(1) == 2);
  CHECK(rep.removed_by.at("H1b").at(1) == 2);
  CHECK(rep.consistent());
  CHECK(rep.convergence_rate() == 1.0);
  CHECK_FALSE(rep.wall_seconds);
  REQUIRE(rep.error_samples.size() == 1);
  CHECK(rep.error_samples[0].find("line 14") != std::string::npos);

  const auto kept = fx::lines_of(fx::read_file(out));
  REQUIRE(kept.size() == 21);
  CHECK(kept[0] + "\n" == kHeader);
  // kept rows are byte-identical to the input rows
  const auto input = fx::lines_of(fx::read_file(in));
  for (std::size_t i = 1; i < kept.size(); ++i) {
    CHECK(std::find(input.begin(), input.end(), kept[i]) != input.end());
  }

  const auto audit = fx::lines_of(fx::read_file(default_audit_path(out)));
  REQUIRE(audit.size() == 5);
  CHECK(audit[0] == "device_id,timestamp,lat,lon,removed_by,pass");
  CHECK(audit[1] == input[7] + ",H1a,1");
  CHECK(audit[2] == input[12] + ",H1b,1");
  for (std::size_t i = 1; i < audit.size(); ++i) {
    CHECK(std::count(audit[i].begin(), audit[i].end(), ',') == 5);
  }
}

TEST_CASE("report json") {
  RunReport r;
  r.lines = 3;
  r.parsed = 3;
  r.cleaned = 2;
  r.removed = 1;
  r.devices = 1;
  r.converged_devices = 1;
  r.removed_by["H2a"][1] = 1;
  r.config = DetectionConfig{}.echo();
  CHECK(r.consistent());
  const auto j = nlohmann::json::parse(r.to_json());
  CHECK(j["removed"] == 1);
  CHECK(j["removed_by"]["H2a"]["1"] == 1);
  CHECK(j["config"]["dist_g"] == "5mi");
  CHECK_FALSE(j.contains("wall_seconds"));
  r.removed_by["H2a"][1] = 2;
  CHECK_FALSE(r.consistent());
}

TEST_CASE("empty input") {
  fx::TempDir dir("empty");
  const std::string in = dir.file("in.csv");
  fx::write_file(in, "");
  CleanOptions opts;
  opts.timing = false;
  const RunReport rep = clean_files({in}, dir.file("out.csv"), opts);
  CHECK(rep.lines == 0);
  CHECK(rep.devices == 0);
  CHECK(rep.removed == 0);
  CHECK(rep.consistent());
  CHECK(fx::read_file(dir.file("out.csv")).empty());
}

TEST_CASE("cleaning is idempotent end to end") {
  fx::TempDir dir("idem");
  const std::string in = dir.file("in.csv");
  fx::write_file(in, kHeader + dirty_device("A") + dirty_device("B", 1600090000));
  CleanOptions opts;
  opts.timing = false;
  const RunReport first = clean_files({in}, dir.file("once.csv"), opts);
  CHECK(first.removed == 4);
  const RunReport second = clean_files({dir.file("once.csv")}, dir.file("twice.csv"), opts);
  CHECK(second.removed == 0);
  CHECK(fx::read_file(dir.file("once.csv")) == fx::read_file(dir.file("twice.csv")));
}

TEST_CASE("output does not depend on workers or chunking") {
  fx::TempDir dir("det");
  const std::string in = dir.file("in.csv.gz");
  std::string text = kHeader;
  for (int d = 0; d < 40; ++d) text += dirty_device("dev" + std::to_string(d), 1600000000 + d * 7);
  {
    LineWriter w(in);
    w.write(text);
    w.close();
  }
  std::string reference;
  std::string reference_report;
  for (unsigned workers : {1u, 2u, 4u}) {
    for (std::size_t chunk : {std::size_t{1}, std::size_t{50}, std::size_t{1} << 18}) {
      CleanOptions opts;
      opts.workers = workers;
      opts.chunk_pings = chunk;
      opts.timing = false;
      opts.audit = true;
      const std::string out = dir.file("out.csv.gz");
      const RunReport rep = clean_files({in}, out, opts);
      LineReader r(out);
      std::string all, line;
      while (r.next(line)) all += line + "\n";
      LineReader ra(default_audit_path(out));
      while (ra.next(line)) all += line + "\n";
      if (reference.empty()) {
        reference = all;
        reference_report = rep.to_json();
      }
      CHECK(all == reference);
      CHECK(rep.to_json() == reference_report);
    }
  }
  CHECK(default_audit_path(dir.file("out.csv.gz")) == dir.file("out.audit.csv.gz"));
}

TEST_CASE("several inputs share one header") {
  fx::TempDir dir("multi");
  fx::write_file(dir.file("a.csv"), kHeader + dirty_device("A"));
  fx::write_file(dir.file("b.csv"), kHeader + dirty_device("B"));
  CleanOptions opts;
  const RunReport rep = clean_files({dir.file("a.csv"), dir.file("b.csv")}, dir.file("out.csv"), opts);
  CHECK(rep.devices == 2);
  CHECK(rep.wall_seconds.has_value());
  const auto lines = fx::lines_of(fx::read_file(dir.file("out.csv")));
  CHECK(std::count(lines.begin(), lines.end(), "device_id,timestamp,lat,lon") == 1);
  CHECK(lines.size() == 1 + 20);
}

TEST_CASE("duplicates are counted in the report") {
  fx::TempDir dir("dups");
  fx::write_file(dir.file("in.csv"), "A,1,0,0\nA,1,0,0\nA,2,0,0\n");
  CleanOptions opts;
  const RunReport rep = clean_files({dir.file("in.csv")}, dir.file("out.csv"), opts);
  CHECK(rep.duplicates == 1);
  CHECK(rep.cleaned == 2);
  CHECK(rep.consistent());
}

TEST_CASE("fatal errors") {
  fx::TempDir dir("fatal");
  CleanOptions opts;
  CHECK_THROWS_AS(clean_files({dir.file("missing.csv")}, dir.file("out.csv"), opts), IoError);
  fx::write_file(dir.file("in.csv"), "A,1,0,0\n");
  CHECK_THROWS_AS(clean_files({dir.file("in.csv")}, dir.file("no/such/dir/out.csv"), opts), IoError);
  opts.config.dist_c = -1;
  CHECK_THROWS_AS(clean_files({dir.file("in.csv")}, dir.file("out.csv"), opts), ConfigError);
}
