// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <string_view>

namespace gpsosc {

/// Mean Earth radius used for every distance in the library, in meters.
inline constexpr double kEarthRadiusM = 6371008.8;

inline constexpr int kMaxGeohashPrecision = 12;

/// Geographic position in degrees.
///
/// A valid LatLon has lat in [-90, 90] and lon in [-180, 180). Use checked()
/// to validate and normalize raw values (lon == 180 wraps to -180).
struct LatLon {
  double lat = 0.0;
  double lon = 0.0;

  static LatLon checked(double lat, double lon);
  bool valid() const noexcept;

  friend bool operator==(const LatLon&, const LatLon&) = default;
};

/// A geohash cell identifier.
///
/// Stored as the interleaved bit string (5 bits per character, most
/// significant first) plus the character count, so comparisons and hashing
/// never touch the textual form.
class ZoneId {
 public:
  ZoneId() = default;
  ZoneId(std::uint64_t bits, int precision);

  /// Parses a base32 geohash string. Throws ParseError on characters outside
  /// the geohash alphabet or on an empty / over-long code.
  static ZoneId parse(std::string_view code);

  std::uint64_t bits() const noexcept { return bits_; }
  int precision() const noexcept { return precision_; }
  std::string code() const;

  /// Prefix of this zone at a coarser precision.
  ZoneId truncated(int precision) const;

  friend bool operator==(const ZoneId&, const ZoneId&) = default;
  friend auto operator<=>(const ZoneId&, const ZoneId&) = default;

 private:
  std::uint64_t bits_ = 0;
  int precision_ = 0;
};

/// Bounds of a geohash cell. Cells are half-open: [min, max) in both axes.
struct CellBox {
  double lat_min = 0.0;
  double lat_max = 0.0;
  double lon_min = 0.0;
  double lon_max = 0.0;
  LatLon center;

  bool contains(const LatLon& p) const noexcept;
};

ZoneId encode_geohash(const LatLon& p, int precision);
CellBox decode_geohash(const ZoneId& zone);
CellBox decode_geohash(std::string_view code);

/// Haversine distance in meters on a sphere of radius kEarthRadiusM.
double great_circle_distance(const LatLon& a, const LatLon& b) noexcept;

/// Point reached by travelling `distance_m` from `origin` along the initial
/// great-circle bearing `bearing_rad` (clockwise from north).
LatLon destination_point(const LatLon& origin, double bearing_rad, double distance_m) noexcept;

}  // namespace gpsosc

template <>
struct std::hash<gpsosc::ZoneId> {
  std::size_t operator()(const gpsosc::ZoneId& z) const noexcept {
    // splitmix64 finalizer; precision folded into the top bits
    std::uint64_t x = z.bits() ^ (static_cast<std::uint64_t>(z.precision()) << 60);
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return static_cast<std::size_t>(x);
  }
};
