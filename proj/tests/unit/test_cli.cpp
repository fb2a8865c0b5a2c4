// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <sstream>

#include <json.hpp>

#include "fixtures.hpp"
#include "gpsosc/cli.hpp"

using namespace gpsosc;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "gpsosc");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  Run r;
  r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

const char* kDirty =
    "device_id,timestamp,lat,lon\n"
    "A,0,38.9897,-76.9378\n"
    "A,2,38.9897,-76.9378\n"
    "A,4,38.9897,-76.9378\n"
    "A,6,38.9897,-76.9378\n"
    "A,8,38.9897,-76.9378\n"
    "A,10,38.9897,-76.9378\n"
    "A,20,38.9897,-76.9274\n"
    "A,30,38.9897,-76.9378\n";

const char* kScenario = R"({"seed": 4, "population": {"device_count": 6, "pings_per_device": 500}})";

}  // namespace

TEST_CASE("usage errors exit with 2") {
  CHECK(run({}).code == kExitConfig);
  CHECK(run({"frobnicate"}).code == kExitConfig);
  CHECK(run({"clean"}).code == kExitConfig);
  CHECK(run({"--help"}).code == kExitOk);
}

TEST_CASE("clean") {
  fx::TempDir dir("cli_clean");
  fx::write_file(dir.file("in.csv"), kDirty);

  SUBCASE("success with audit and report") {
    const Run r = run({"clean", dir.file("in.csv"), "-o", dir.file("out.csv"), "--audit", "--report",
                       dir.file("rep.json"), "--no-timing", "--workers", "2"});
    CHECK(r.code == kExitOk);
    CHECK(fx::lines_of(fx::read_file(dir.file("out.csv"))).size() == 8);
    const auto audit = fx::lines_of(fx::read_file(dir.file("out.audit.csv")));
    REQUIRE(audit.size() == 2);
    CHECK(audit[1] == "A,20,38.9897,-76.9274,H1a,1");
    const auto j = nlohmann::json::parse(fx::read_file(dir.file("rep.json")));
    CHECK(j["removed"] == 1);
    CHECK_FALSE(j.contains("wall_seconds"));
    CHECK_FALSE(r.err.empty());
  }
  SUBCASE("no-timing output is byte-stable") {
    run({"clean", dir.file("in.csv"), "-o", dir.file("a.csv"), "--report", dir.file("a.json"), "--no-timing"});
    run({"clean", dir.file("in.csv"), "-o", dir.file("b.csv"), "--report", dir.file("b.json"), "--no-timing"});
    CHECK(fx::read_file(dir.file("a.json")) == fx::read_file(dir.file("b.json")));
    CHECK(fx::read_file(dir.file("a.csv")) == fx::read_file(dir.file("b.csv")));
  }
  SUBCASE("config overrides") {
    fx::write_file(dir.file("c.conf"), "dist_c = 2mi\n");
    const Run r = run({"clean", dir.file("in.csv"), "-o", dir.file("out.csv"), "--config", dir.file("c.conf")});
    CHECK(r.code == kExitOk);
    CHECK(fx::lines_of(fx::read_file(dir.file("out.csv"))).size() == 9);
  }
  SUBCASE("empty input") {
    fx::write_file(dir.file("empty.csv"), "");
    CHECK(run({"clean", dir.file("empty.csv"), "-o", dir.file("out.csv")}).code == kExitOk);
  }
  SUBCASE("missing input is fatal I/O") {
    const Run r = run({"clean", dir.file("nope.csv"), "-o", dir.file("out.csv")});
    CHECK(r.code == kExitIo);
    CHECK(r.err.find("nope.csv") != std::string::npos);
  }
  SUBCASE("bad config is exit 2") {
    CHECK(run({"clean", dir.file("in.csv"), "-o", dir.file("out.csv"), "--set", "dist_g=5mph"}).code ==
          kExitConfig);
    CHECK(run({"clean", dir.file("in.csv"), "-o", dir.file("out.csv"), "--set", "dist_g"}).code == kExitConfig);
    CHECK(run({"clean", dir.file("in.csv"), "-o", dir.file("out.csv"), "--config", dir.file("none.conf")}).code ==
          kExitIo);
    CHECK(run({"clean", dir.file("in.csv"), "-o", dir.file("out.csv"), "--schema", "device=3,bogus"}).code ==
          kExitConfig);
  }
}

TEST_CASE("synth, eval and sweep") {
  fx::TempDir dir("cli_synth");
  fx::write_file(dir.file("s.json"), kScenario);
  const std::string data = dir.file("data");
  const Run s = run({"synth", dir.file("s.json"), "-o", data});
  REQUIRE(s.code == kExitOk);
  const std::string trace = data + "/traces.csv";
  const std::string truth = data + "/truth.csv";

  SUBCASE("seed override") {
    REQUIRE(run({"synth", dir.file("s.json"), "-o", dir.file("again")}).code == kExitOk);
    REQUIRE(run({"synth", dir.file("s.json"), "-o", dir.file("other"), "--seed", "99"}).code == kExitOk);
    CHECK(fx::read_file(dir.file("again") + "/traces.csv") == fx::read_file(trace));
    CHECK(fx::read_file(dir.file("other") + "/traces.csv") != fx::read_file(trace));
  }
  SUBCASE("eval with baseline") {
    const Run r = run({"eval", trace, truth, "--baseline", "speed", "--report", dir.file("e.json")});
    REQUIRE(r.code == kExitOk);
    const auto lines = fx::lines_of(r.out);
    REQUIRE(lines.size() == 3);
    CHECK(lines[1].rfind("detector", 0) == 0);
    CHECK(lines[2].rfind("speed", 0) == 0);
    const auto j = nlohmann::json::parse(fx::read_file(dir.file("e.json")));
    CHECK(j["rows"].size() == 2);
    CHECK(j["rows"][0]["recall"].get<double>() >= 0.9);
  }
  SUBCASE("eval with a missing truth file") { CHECK(run({"eval", trace, dir.file("none.csv")}).code == kExitIo); }
  SUBCASE("unknown baseline") { CHECK(run({"eval", trace, truth, "--baseline", "kalman"}).code == kExitConfig); }
  SUBCASE("sweep") {
    const Run r = run({"sweep", trace, truth, "--param", "dist_g", "--grid", "3mi, 5mi,8mi", "--report",
                       dir.file("w.json")});
    REQUIRE(r.code == kExitOk);
    CHECK(fx::lines_of(r.out).size() == 4);
    const auto j = nlohmann::json::parse(fx::read_file(dir.file("w.json")));
    CHECK(j["rows"].size() == 3);
    CHECK(j["rows"][1]["value"] == "5mi");
  }
  SUBCASE("sweep of an unknown parameter") {
    const Run r = run({"sweep", trace, truth, "--param", "nonsense", "--grid", "1"});
    CHECK(r.code == kExitConfig);
    CHECK(r.err.find("config error") != std::string::npos);
  }
}

TEST_CASE("infeasible scenario") {
  fx::TempDir dir("cli_bad");
  fx::write_file(dir.file("s.json"), R"({"devices": [{"id": "d", "start": {"lat": 38.9, "lon": -77.0},
      "segments": [{"dwell": {"duration_s": 1800, "interval_s": 10}}],
      "injections": [{"kind": "far_jump", "jump_m": 3000, "gap_s": 60}]}]})");
  const Run r = run({"synth", dir.file("s.json"), "-o", dir.file("out")});
  CHECK(r.code == kExitConfig);
  CHECK(r.err.find("infeasible") != std::string::npos);
  CHECK(r.err.find("dist_g") != std::string::npos);
  CHECK(run({"synth", dir.file("missing.json"), "-o", dir.file("out")}).code == kExitIo);
  fx::write_file(dir.file("broken.json"), "{\"seed\": ");
  CHECK(run({"synth", dir.file("broken.json"), "-o", dir.file("out")}).code == kExitConfig);
}
