#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "wifiloc/osmag.hpp"
#include "wifiloc/propagation.hpp"
#include "wifiloc/robot_localize.hpp"

namespace wifiloc {

/// Portable random source: std::mt19937_64 (whose output sequence is fixed by
/// the standard) with hand-rolled transforms, since the standard library's
/// distributions are implementation-defined.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) from the top 53 bits of one draw.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  int index(int n) { return static_cast<int>(uniform() * n); }
  /// Standard normal via Box-Muller; one value per two uniforms.
  double gaussian();

 private:
  std::mt19937_64 engine_;
};

/// Axis-aligned box in the map frame, optionally restricted to one floor.
struct HoldoutRegion {
  double x_min = 0.0;
  double x_max = 0.0;
  double y_min = 0.0;
  double y_max = 0.0;
  std::optional<int> level;

  bool empty() const { return !(x_min < x_max && y_min < y_max); }
  bool contains(const LocalPoint3& p, int lvl) const {
    return p.x >= x_min && p.x <= x_max && p.y >= y_min && p.y <= y_max &&
           (!level || *level == lvl);
  }
};

struct ScenarioSpec {
  int rooms_x = 6;
  int rooms_y = 4;
  int floors = 2;
  double room_size = 8.0;
  int ap_count = 12;
  /// The first `surveyed_count` APs are written into the map as surveyed.
  int surveyed_count = 4;
  int fingerprint_count = 400;
  /// Extra positions with scans, kept out of the map.
  int test_count = 0;
  PropagationParams params{-28.79, 2.5, 10.77, 4.0};
  std::uint64_t seed = 1;
  std::optional<HoldoutRegion> holdout_region;

  GeoPoint origin{31.178, 121.590};
  double floor_height = kDefaultFloorHeight;
  double ap_height = 2.5;        ///< above the AP's floor
  double antenna_height = 0.5;   ///< robot antenna above its floor
  double ap_wall_margin = 0.5;   ///< keep APs this far inside their room
  double fp_wall_margin = 0.25;  ///< same for fingerprints and test points
  double sensitivity_floor = -100.0;

  /// Throws DomainError on a non-positive count or size.
  void validate() const;
};

struct TruthAp {
  std::string ap_id;
  LocalPoint3 position;
  int level = 0;
  bool surveyed = false;
};

struct TruthPair {
  std::string ap_id;
  std::int64_t node_id = 0;
  double distance = 0.0;
  int wall_count = 0;
  double rssi_clean = 0.0;
  double rssi = 0.0;
  bool kept = false;  ///< false when below the sensitivity floor
};

struct TruthLedger {
  PropagationParams params;
  std::vector<TruthAp> aps;
  std::vector<TruthPair> pairs;

  const TruthAp* find_ap(const std::string& ap_id) const;
};

struct Scenario {
  OsmAgMap map;
  TruthLedger truth;
  std::vector<TestRecord> testset;
};

/// Grid building, random APs and fingerprints, RSSI from the path-loss model
/// plus Gaussian shadowing. Deterministic for a fixed spec.
Scenario generate(const ScenarioSpec& spec);

struct HoldoutSplit {
  OsmAgMap training;
  std::vector<TestRecord> test;  ///< tagged "holdout"
};

/// Move the fingerprints inside `region` out of the map into test records.
HoldoutSplit holdout_split(const OsmAgMap& map, const HoldoutRegion& region);

}  // namespace wifiloc
