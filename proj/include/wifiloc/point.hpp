#pragma once

#include <cmath>

namespace wifiloc {

/// Metric map-frame point: x east, y north, z up, all meters.
struct LocalPoint3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  friend bool operator==(const LocalPoint3&, const LocalPoint3&) = default;

  LocalPoint3 operator+(const LocalPoint3& o) const { return {x + o.x, y + o.y, z + o.z}; }
  LocalPoint3 operator-(const LocalPoint3& o) const { return {x - o.x, y - o.y, z - o.z}; }
  LocalPoint3 operator*(double s) const { return {x * s, y * s, z * s}; }

  bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

/// WGS-84 latitude/longitude in degrees.
struct GeoPoint {
  double lat = 0.0;
  double lon = 0.0;

  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

}  // namespace wifiloc
