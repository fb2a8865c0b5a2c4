// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#include <doctest.h>

#include "gpsosc/error.hpp"
#include "gpsosc/ping.hpp"

using namespace gpsosc;

TEST_CASE("segment speed") {
  const Ping a{"d", 100.0, {0.0, 0.0}, 1};
  SUBCASE("stationary") {
    const Ping b{"d", 160.0, {0.0, 0.0}, 2};
    CHECK(segment_speed(a, b) == 0.0);
  }
  SUBCASE("one equatorial degree in an hour") {
    const Ping b{"d", 3700.0, {0.0, 1.0}, 2};
    CHECK(segment_speed(a, b) == doctest::Approx(30.89).epsilon(0.01 / 30.89));
  }
  SUBCASE("equal timestamps clamp to the floor") {
    const Ping b{"d", 100.0, {0.0, 0.001}, 2};
    CHECK(segment_speed(a, b, 1.0) == great_circle_distance(a.loc, b.loc));
    CHECK(segment_speed(a, b, 2.0) == great_circle_distance(a.loc, b.loc) / 2.0);
  }
  SUBCASE("sub-floor gaps clamp too") {
    const Ping b{"d", 100.25, {0.0, 0.001}, 2};
    CHECK(segment_speed(a, b, 1.0) == great_circle_distance(a.loc, b.loc));
  }
  SUBCASE("reversed order") {
    const Ping b{"d", 99.0, {0.0, 0.0}, 2};
    CHECK_THROWS_AS(segment_speed(a, b), OrderingError);
  }
}
