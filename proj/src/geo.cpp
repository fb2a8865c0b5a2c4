// Copyright 2026 The gpsosc Authors
// SPDX-License-Identifier: Apache-2.0

#include "gpsosc/geo.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "gpsosc/error.hpp"

namespace gpsosc {
namespace {

constexpr std::string_view kAlphabet = "0123456789bcdefghjkmnpqrstuvwxyz";

constexpr std::array<std::int8_t, 128> make_reverse_alphabet() {
  std::array<std::int8_t, 128> table{};
  for (auto& v : table) v = -1;
  for (std::size_t i = 0; i < kAlphabet.size(); ++i) {
    table[static_cast<unsigned char>(kAlphabet[i])] = static_cast<std::int8_t>(i);
  }
  return table;
}

constexpr auto kReverseAlphabet = make_reverse_alphabet();

constexpr double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
constexpr double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

void check_precision(int precision) {
  if (precision < 1 || precision > kMaxGeohashPrecision) {
    throw InputDomainError("geohash precision must be in [1, 12], got " + std::to_string(precision));
  }
}

}  // namespace

LatLon LatLon::checked(double lat, double lon) {
  if (!std::isfinite(lat) || lat < -90.0 || lat > 90.0) {
    throw InputDomainError("latitude out of range: " + std::to_string(lat));
  }
  if (!std::isfinite(lon) || lon < -180.0 || lon > 180.0) {
    throw InputDomainError("longitude out of range: " + std::to_string(lon));
  }
  if (lon == 180.0) lon = -180.0;
  return LatLon{lat, lon};
}

bool LatLon::valid() const noexcept {
  return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 && lon >= -180.0 &&
         lon < 180.0;
}

ZoneId::ZoneId(std::uint64_t bits, int precision) : bits_(bits), precision_(precision) {
  check_precision(precision);
  const int nbits = precision * 5;
  if (nbits < 64 && (bits >> nbits) != 0) {
    throw InputDomainError("geohash bits exceed precision");
  }
}

ZoneId ZoneId::parse(std::string_view code) {
  if (code.empty() || code.size() > static_cast<std::size_t>(kMaxGeohashPrecision)) {
    throw ParseError("geohash code length must be in [1, 12]: '" + std::string(code) + "'");
  }
  std::uint64_t bits = 0;
  for (char ch : code) {
    const auto uc = static_cast<unsigned char>(ch);
    const int v = uc < 128 ? kReverseAlphabet[uc] : -1;
    if (v < 0) {
      throw ParseError("invalid geohash character '" + std::string(1, ch) + "' in '" + std::string(code) + "'");
    }
    bits = (bits << 5) | static_cast<std::uint64_t>(v);
  }
  return ZoneId(bits, static_cast<int>(code.size()));
}

std::string ZoneId::code() const {
  std::string out(static_cast<std::size_t>(precision_), '0');
  std::uint64_t b = bits_;
  for (int i = precision_ - 1; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = kAlphabet[b & 31U];
    b >>= 5;
  }
  return out;
}

ZoneId ZoneId::truncated(int precision) const {
  if (precision < 1 || precision > precision_) {
    throw InputDomainError("cannot truncate geohash of precision " + std::to_string(precision_) + " to " +
                           std::to_string(precision));
  }
  return ZoneId(bits_ >> (5 * (precision_ - precision)), precision);
}

bool CellBox::contains(const LatLon& p) const noexcept {
  const bool lat_ok = p.lat >= lat_min && (p.lat < lat_max || (lat_max == 90.0 && p.lat == 90.0));
  const bool lon_ok = p.lon >= lon_min && p.lon < lon_max;
  return lat_ok && lon_ok;
}

ZoneId encode_geohash(const LatLon& p, int precision) {
  check_precision(precision);
  const LatLon q = LatLon::checked(p.lat, p.lon);

  double lat_lo = -90.0, lat_hi = 90.0;
  double lon_lo = -180.0, lon_hi = 180.0;
  std::uint64_t bits = 0;
  const int nbits = precision * 5;
  for (int i = 0; i < nbits; ++i) {
    bits <<= 1;
    if (i % 2 == 0) {
      const double mid = (lon_lo + lon_hi) / 2.0;
      if (q.lon >= mid) {
        bits |= 1U;
        lon_lo = mid;
      } else {
        lon_hi = mid;
      }
    } else {
      const double mid = (lat_lo + lat_hi) / 2.0;
      if (q.lat >= mid) {
        bits |= 1U;
        lat_lo = mid;
      } else {
        lat_hi = mid;
      }
    }
  }
  return ZoneId(bits, precision);
}

CellBox decode_geohash(const ZoneId& zone) {
  double lat_lo = -90.0, lat_hi = 90.0;
  double lon_lo = -180.0, lon_hi = 180.0;
  const int nbits = zone.precision() * 5;
  for (int i = 0; i < nbits; ++i) {
    const bool bit = ((zone.bits() >> (nbits - 1 - i)) & 1U) != 0;
    if (i % 2 == 0) {
      const double mid = (lon_lo + lon_hi) / 2.0;
      (bit ? lon_lo : lon_hi) = mid;
    } else {
      const double mid = (lat_lo + lat_hi) / 2.0;
      (bit ? lat_lo : lat_hi) = mid;
    }
  }
  CellBox box;
  box.lat_min = lat_lo;
  box.lat_max = lat_hi;
  box.lon_min = lon_lo;
  box.lon_max = lon_hi;
  box.center = LatLon{(lat_lo + lat_hi) / 2.0, (lon_lo + lon_hi) / 2.0};
  return box;
}

CellBox decode_geohash(std::string_view code) { return decode_geohash(ZoneId::parse(code)); }

double great_circle_distance(const LatLon& a, const LatLon& b) noexcept {
  const double phi1 = deg2rad(a.lat);
  const double phi2 = deg2rad(b.lat);
  const double dphi = phi2 - phi1;
  const double dlambda = deg2rad(b.lon - a.lon);
  const double s1 = std::sin(dphi / 2.0);
  const double s2 = std::sin(dlambda / 2.0);
  double h = s1 * s1 + std::cos(phi1) * std::cos(phi2) * s2 * s2;
  if (h > 1.0) h = 1.0;
  return 2.0 * kEarthRadiusM * std::asin(std::sqrt(h));
}

LatLon destination_point(const LatLon& origin, double bearing_rad, double distance_m) noexcept {
  const double delta = distance_m / kEarthRadiusM;
  const double phi1 = deg2rad(origin.lat);
  const double lambda1 = deg2rad(origin.lon);
  const double sin_phi2 = std::sin(phi1) * std::cos(delta) + std::cos(phi1) * std::sin(delta) * std::cos(bearing_rad);
  const double phi2 = std::asin(std::clamp(sin_phi2, -1.0, 1.0));
  const double lambda2 = lambda1 + std::atan2(std::sin(bearing_rad) * std::sin(delta) * std::cos(phi1),
                                              std::cos(delta) - std::sin(phi1) * sin_phi2);
  double lon = rad2deg(lambda2);
  lon = std::fmod(lon + 540.0, 360.0) - 180.0;
  if (lon >= 180.0) lon -= 360.0;
  return LatLon{rad2deg(phi2), lon};
}

}  // namespace gpsosc
