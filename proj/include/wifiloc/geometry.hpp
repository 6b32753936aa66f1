#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "wifiloc/point.hpp"

namespace wifiloc {

/// Mean equatorial radius used by the local projection (WGS-84 semi-major axis).
inline constexpr double kEarthRadius = 6378137.0;
inline constexpr double kDefaultFloorHeight = 3.2;

struct GeometryConfig {
  double floor_height = kDefaultFloorHeight;
  /// Treat every floor slab between the endpoints as one more attenuator.
  bool count_floor_slabs = true;
};

/// A vertical wall rectangle: the 2D edge a-b extruded over [z_min, z_max].
struct WallSegment {
  LocalPoint3 a;
  LocalPoint3 b;
  int level = 0;
  double z_min = 0.0;
  double z_max = kDefaultFloorHeight;

  friend bool operator==(const WallSegment&, const WallSegment&) = default;
};

struct CrossingReport {
  /// Walls plus (optionally) floor slabs on the path.
  int count = 0;
  /// Indices into the wall list that was queried, ascending.
  std::vector<std::size_t> crossed;
  int slabs = 0;
  bool is_los = true;
};

double euclidean(const LocalPoint3& a, const LocalPoint3& b);

/// Equirectangular projection around `origin`. Throws DomainError when `p` is
/// a degree or more away from the origin on either axis.
LocalPoint3 project(const GeoPoint& origin, const GeoPoint& p, int level,
                    double floor_height = kDefaultFloorHeight);

/// Inverse of the horizontal part of project().
GeoPoint unproject(const GeoPoint& origin, const LocalPoint3& p);

/// Count walls whose vertical rectangle is strictly pierced by the open
/// segment (from, to). Piercings closer than 1e-9 m to each other (a path
/// through a shared wall corner) count once; a path collinear with a wall
/// grazes it and does not count.
CrossingReport count_crossings(const LocalPoint3& from, const LocalPoint3& to,
                               std::span<const WallSegment> walls,
                               const GeometryConfig& cfg = {});

/// Number of floor slabs strictly between the two heights.
int count_slabs(double z_from, double z_to, double floor_height);

/// Floor index whose band [level*h, (level+1)*h) contains z.
int level_of_height(double z, double floor_height);

}  // namespace wifiloc
