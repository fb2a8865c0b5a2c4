// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include <limits>
#include <random>

#include "fixtures.hpp"
#include "gpsosc/communities.hpp"
#include "gpsosc/config.hpp"
#include "gpsosc/error.hpp"
#include "oracles.hpp"

using namespace gpsosc;

namespace {

constexpr double kDistC = 0.5 * units::kMile;

CommunitySequence communities_of(const Trace& t, double dist_c = kDistC) {
  return build_communities(project_trace(t, 7), dist_c);
}

}  // namespace

TEST_CASE("projection") {
  CHECK(project_trace(Trace{}, 7).empty());
  const Trace one = fx::TraceBuilder().at(0, {57.64911, 10.40744}).build();
  const auto z = project_trace(one, 7);
  REQUIRE(z.size() == 1);
  CHECK(z[0].zone.code() == "u4pruyd");
  CHECK(z[0].ping == one.pings[0]);

  const Trace two = fx::TraceBuilder().at(0, fx::kHome).at(1, fx::offset(fx::kHome, 10, 0)).build();
  const auto z2 = project_trace(two, 7);
  CHECK((z2[0].zone == z2[1].zone) == (oracle::geohash(two.pings[0].loc.lat, two.pings[0].loc.lon, 7) ==
                                       oracle::geohash(two.pings[1].loc.lat, two.pings[1].loc.lon, 7)));
}

TEST_CASE("close sightings form one community") {
  fx::TraceBuilder b;
  for (int i = 0; i < 10; ++i) b.at(i * 10, fx::offset(fx::kHome, i * 40.0, 0));
  const auto seq = communities_of(b.build());
  REQUIRE(seq.communities.size() == 1);
  CHECK(seq.communities[0].frequency == 10);
  CHECK(seq.communities[0].duration == 90.0);
}

TEST_CASE("large gaps split communities") {
  fx::TraceBuilder b;
  LatLon p = fx::kHome;
  for (int i = 0; i < 8; ++i) {
    b.at(i, p);
    p = fx::offset(p, i % 2 == 0 ? 0.0 : 2000.0, 0);  // alternate 0 m and 2000 m gaps
  }
  const auto seq = communities_of(b.build());
  REQUIRE(seq.communities.size() == 4);
  for (const auto& c : seq.communities) CHECK(c.frequency == 2);
}

TEST_CASE("single sighting community") {
  const auto seq = communities_of(fx::TraceBuilder().at(5, fx::kHome).build());
  REQUIRE(seq.communities.size() == 1);
  CHECK(seq.communities[0].frequency == 1);
  CHECK(seq.communities[0].duration == 0.0);
  CHECK(seq.communities[0].centroid == fx::kHome);
}

TEST_CASE("membership is inclusive at dist_c") {
  const LatLon a = fx::kHome;
  const LatLon b = fx::offset(a, 500, 0);
  const double d = great_circle_distance(a, b);
  const Trace t = fx::TraceBuilder().at(0, a).at(1, b).build();
  CHECK(communities_of(t, d).communities.size() == 1);
  CHECK(communities_of(t, std::nextafter(d, 0.0)).communities.size() == 2);
}

TEST_CASE("centroid is the coordinate mean") {
  const Trace t = fx::TraceBuilder().at(0, {10.0, 20.0}).at(1, {10.002, 20.004}).at(2, {10.001, 20.002}).build();
  const auto seq = communities_of(t);
  REQUIRE(seq.communities.size() == 1);
  CHECK(seq.communities[0].centroid.lat == doctest::Approx(10.001));
  CHECK(seq.communities[0].centroid.lon == doctest::Approx(20.002));
}

TEST_CASE("stability") {
  Community c;
  c.frequency = 6;
  c.duration = 10;
  CHECK(classify_stability(c, 5, 300));
  c.frequency = 2;
  c.duration = 400;
  CHECK(classify_stability(c, 5, 300));
  c.frequency = 1;
  c.duration = 0;
  CHECK_FALSE(classify_stability(c, 5, 300));
  c.frequency = 5;
  CHECK(classify_stability(c, 5, 300));
  c.frequency = 4;
  c.duration = 300;
  CHECK(classify_stability(c, 5, 300));
  c.duration = 299.999;
  CHECK_FALSE(classify_stability(c, 5, 300));
}

TEST_CASE("stability extremes and monotonicity") {
  std::mt19937_64 rng(17);
  const double inf = std::numeric_limits<double>::infinity();
  const std::size_t never = std::numeric_limits<std::size_t>::max();
  for (int it = 0; it < 300; ++it) {
    auto seq = communities_of(fx::random_trace(rng, "d"));
    for (const Community& c : seq.communities) {
      CHECK(classify_stability(c, 1, 300));
      CHECK_FALSE(classify_stability(c, never, inf));
      // one more member never makes it less stable
      Community bigger = c;
      bigger.frequency += 1;
      bigger.duration += 1;
      if (classify_stability(c, 5, 300)) CHECK(classify_stability(bigger, 5, 300));
    }
  }
}

TEST_CASE("stable zone set") {
  // stable dwell spanning two zones, then an unstable single sighting in one of them
  fx::TraceBuilder b;
  const LatLon a = fx::kHome;
  const LatLon far = fx::offset(a, 5000, 0);
  b.dwell(0, a, 3, 10).dwell(30, fx::offset(a, 200, 0), 3, 10);
  b.at(100, far);
  b.at(200, a);  // after the far sighting; joins a new unstable community
  auto seq = communities_of(b.build());
  REQUIRE(seq.communities.size() == 3);
  SUBCASE("nothing stable") {
    classify_communities(seq, 100, 1e9);
    CHECK(stable_zone_set(seq).empty());
  }
  SUBCASE("union over stable communities") {
    classify_communities(seq, 5, 300);
    CHECK(seq.communities[0].stable);
    CHECK_FALSE(seq.communities[1].stable);
    CHECK_FALSE(seq.communities[2].stable);
    const ZoneSet zones = stable_zone_set(seq);
    CHECK(zones.size() == seq.communities[0].zones.size());
    CHECK(seq.communities[0].zones.size() == 2);
    for (const auto& z : seq.communities[0].zones) CHECK(zones.count(z) == 1);
    CHECK(zones.count(seq.communities[2].zones[0]) == 1);  // shared with the stable one
    CHECK(zones.count(seq.communities[1].zones[0]) == 0);
  }
}

TEST_CASE("community kinematics") {
  const LatLon a = fx::kHome;
  SUBCASE("identical centroids") {
    const auto seq = communities_of(fx::TraceBuilder().at(0, a).at(10, fx::offset(a, 900, 0)).at(20, a).build());
    const auto k = community_kinematics(seq.communities[0], seq.communities[2]);
    CHECK(k.distance == 0.0);
    CHECK(k.speed == 0.0);
    CHECK(k.dt == 20.0);
  }
  SUBCASE("120 mph") {
    const LatLon b = destination_point(a, 1.0, 16093.44);
    const auto seq = communities_of(fx::TraceBuilder().dwell(0, a, 2, 5).dwell(305, b, 2, 5).build());
    REQUIRE(seq.communities.size() == 2);
    const auto k = community_kinematics(seq.communities[0], seq.communities[1]);
    CHECK(k.dt == 300.0);
    CHECK(k.speed == doctest::Approx(53.6448).epsilon(1e-6));
  }
  SUBCASE("zero gap clamps to the floor") {
    const LatLon b = fx::offset(a, 3000, 0);
    const auto seq = communities_of(fx::TraceBuilder().at(0, a).at(0, b).build());
    REQUIRE(seq.communities.size() == 2);
    const auto k = community_kinematics(seq.communities[0], seq.communities[1], 1.0);
    CHECK(k.dt == 1.0);
    CHECK(k.speed == k.distance);
  }
  SUBCASE("order is a contract") {
    const auto seq = communities_of(fx::TraceBuilder().at(0, a).at(10, fx::offset(a, 3000, 0)).build());
    CHECK_THROWS_AS(community_kinematics(seq.communities[1], seq.communities[0]), ContractError);
  }
}

TEST_CASE("partition and maximality on random traces") {
  std::mt19937_64 rng(23);
  for (int it = 0; it < 1000; ++it) {
    const Trace t = fx::random_trace(rng, "d");
    const auto seq = communities_of(t);
    std::size_t next = 0;
    for (std::size_t c = 0; c < seq.communities.size(); ++c) {
      const Community& com = seq.communities[c];
      REQUIRE(com.begin == next);
      REQUIRE(com.end > com.begin);
      REQUIRE(com.frequency == com.end - com.begin);
      REQUIRE(com.duration >= 0.0);
      REQUIRE((com.duration == 0.0) == (seq.zoned[com.begin].ping.t == seq.zoned[com.end - 1].ping.t));
      for (std::size_t i = com.begin + 1; i < com.end; ++i) {
        REQUIRE(great_circle_distance(seq.zoned[i - 1].ping.loc, seq.zoned[i].ping.loc) <= kDistC);
      }
      if (c + 1 < seq.communities.size()) {
        REQUIRE(great_circle_distance(seq.zoned[com.end - 1].ping.loc, seq.zoned[com.end].ping.loc) > kDistC);
      }
      next = com.end;
    }
    REQUIRE(next == t.pings.size());
    for (std::size_t i = 0; i < t.pings.size(); ++i) REQUIRE(seq.zoned[i].ping == t.pings[i]);
  }
}
