#include "wifiloc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <utility>

#include "wifiloc/error.hpp"

namespace wifiloc {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
// Piercings (and endpoint touches) closer than this are the same event.
constexpr double kEpsGeo = 1e-9;

double cross2(double ax, double ay, double bx, double by) { return ax * by - ay * bx; }

}  // namespace

double euclidean(const LocalPoint3& a, const LocalPoint3& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  const double dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

LocalPoint3 project(const GeoPoint& origin, const GeoPoint& p, int level, double floor_height) {
  if (!(std::abs(p.lat) <= 90.0) || !(std::abs(p.lon) <= 180.0) ||
      !(std::abs(origin.lat) <= 90.0) || !(std::abs(origin.lon) <= 180.0)) {
    throw DomainError("latitude/longitude out of range");
  }
  const double dlat = p.lat - origin.lat;
  const double dlon = p.lon - origin.lon;
  if (!(std::abs(dlat) < 1.0) || !(std::abs(dlon) < 1.0)) {
    throw DomainError("point is too far from the projection origin for a local tangent frame");
  }
  return {kEarthRadius * std::cos(origin.lat * kDegToRad) * dlon * kDegToRad,
          kEarthRadius * dlat * kDegToRad, level * floor_height};
}

GeoPoint unproject(const GeoPoint& origin, const LocalPoint3& p) {
  return {origin.lat + p.y / kEarthRadius / kDegToRad,
          origin.lon + p.x / (kEarthRadius * std::cos(origin.lat * kDegToRad)) / kDegToRad};
}

int count_slabs(double z_from, double z_to, double floor_height) {
  const double lo = std::min(z_from, z_to) / floor_height;
  const double hi = std::max(z_from, z_to) / floor_height;
  const long first = static_cast<long>(std::floor(lo)) + 1;
  const long last = static_cast<long>(std::ceil(hi)) - 1;
  return static_cast<int>(std::max(0L, last - first + 1));
}

int level_of_height(double z, double floor_height) {
  return static_cast<int>(std::floor(z / floor_height));
}

CrossingReport count_crossings(const LocalPoint3& from, const LocalPoint3& to,
                               std::span<const WallSegment> walls, const GeometryConfig& cfg) {
  CrossingReport report;
  const double rx = to.x - from.x;
  const double ry = to.y - from.y;
  const double rz = to.z - from.z;
  const double len = std::sqrt(rx * rx + ry * ry + rz * rz);
  const double len2d = std::hypot(rx, ry);

  const double min_x = std::min(from.x, to.x);
  const double max_x = std::max(from.x, to.x);
  const double min_y = std::min(from.y, to.y);
  const double max_y = std::max(from.y, to.y);
  const double min_z = std::min(from.z, to.z);
  const double max_z = std::max(from.z, to.z);

  // (path parameter, wall index) for every piercing
  std::vector<std::pair<double, std::size_t>> hits;
  if (len2d > 0.0) {
    for (std::size_t i = 0; i < walls.size(); ++i) {
      const WallSegment& w = walls[i];
      if (std::max(w.a.x, w.b.x) < min_x - kEpsGeo || std::min(w.a.x, w.b.x) > max_x + kEpsGeo ||
          std::max(w.a.y, w.b.y) < min_y - kEpsGeo || std::min(w.a.y, w.b.y) > max_y + kEpsGeo ||
          w.z_max < min_z || w.z_min > max_z) {
        continue;
      }
      const double sx = w.b.x - w.a.x;
      const double sy = w.b.y - w.a.y;
      const double slen = std::hypot(sx, sy);
      const double denom = cross2(rx, ry, sx, sy);
      // parallel or collinear: grazing, never a crossing
      if (std::abs(denom) <= 1e-12 * len2d * slen) continue;
      const double qx = w.a.x - from.x;
      const double qy = w.a.y - from.y;
      const double t = cross2(qx, qy, sx, sy) / denom;
      const double u = cross2(qx, qy, rx, ry) / denom;
      if (t * len2d <= kEpsGeo || (1.0 - t) * len2d <= kEpsGeo) continue;
      if (u * slen < -kEpsGeo || (1.0 - u) * slen < -kEpsGeo) continue;
      const double z = from.z + t * rz;
      if (z < w.z_min || z >= w.z_max) continue;
      hits.emplace_back(t, i);
    }
  }

  std::sort(hits.begin(), hits.end());
  double last_t = -1.0;
  for (const auto& [t, idx] : hits) {
    if (!report.crossed.empty() && (t - last_t) * len < kEpsGeo) continue;
    report.crossed.push_back(idx);
    last_t = t;
  }
  std::sort(report.crossed.begin(), report.crossed.end());

  if (cfg.count_floor_slabs) report.slabs = count_slabs(from.z, to.z, cfg.floor_height);
  report.count = static_cast<int>(report.crossed.size()) + report.slabs;
  report.is_los = report.count == 0;
  return report;
}

}  // namespace wifiloc
