#include "wifiloc/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>

#include "wifiloc/error.hpp"

namespace wifiloc {

double Rng::gaussian() {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

void ScenarioSpec::validate() const {
  if (rooms_x < 1 || rooms_y < 1 || floors < 1 || ap_count < 1 || fingerprint_count < 1) {
    throw DomainError("scenario counts must be at least 1");
  }
  if (surveyed_count < 0 || surveyed_count > ap_count || test_count < 0) {
    throw DomainError("surveyed/test counts out of range");
  }
  if (!(room_size > 0.0) || !(floor_height > 0.0)) throw DomainError("sizes must be positive");
  if (!(2.0 * ap_wall_margin < room_size) || !(2.0 * fp_wall_margin < room_size)) {
    throw DomainError("wall margins leave no room interior");
  }
  params.validate();
}

const TruthAp* TruthLedger::find_ap(const std::string& ap_id) const {
  for (const auto& ap : aps) {
    if (ap.ap_id == ap_id) return &ap;
  }
  return nullptr;
}

namespace {

struct Sampled {
  LocalPoint3 position;
  int level = 0;
};

Sampled sample_in_room(Rng& rng, const ScenarioSpec& spec, double margin, double height) {
  Sampled s;
  s.level = rng.index(spec.floors);
  const int i = rng.index(spec.rooms_x);
  const int j = rng.index(spec.rooms_y);
  s.position.x = i * spec.room_size + rng.uniform(margin, spec.room_size - margin);
  s.position.y = j * spec.room_size + rng.uniform(margin, spec.room_size - margin);
  s.position.z = s.level * spec.floor_height + height;
  return s;
}

std::string bssid_for(int index) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "02:00:00:00:%02x:%02x", (index >> 8) & 0xff, index & 0xff);
  return buf;
}

}  // namespace

Scenario generate(const ScenarioSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  Scenario sc;
  OsmAgMap& map = sc.map;
  map.origin = {quantize_degrees(spec.origin.lat), quantize_degrees(spec.origin.lon)};
  map.floor_height = spec.floor_height;
  sc.truth.params = spec.params;

  std::int64_t next_id = 1;
  const int nx = spec.rooms_x + 1;
  const int ny = spec.rooms_y + 1;
  for (int level = 0; level < spec.floors; ++level) {
    const std::int64_t base = next_id;
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        OsmNode n;
        n.id = next_id++;
        n.geo = map.snap({i * spec.room_size, j * spec.room_size, 0.0}).first;
        map.nodes.emplace(n.id, std::move(n));
      }
    }
    auto node_at = [&](int i, int j) { return base + j * nx + i; };
    for (int j = 0; j < spec.rooms_y; ++j) {
      for (int i = 0; i < spec.rooms_x; ++i) {
        OsmWay w;
        w.id = next_id++;
        w.node_refs = {node_at(i, j), node_at(i + 1, j), node_at(i + 1, j + 1), node_at(i, j + 1),
                       node_at(i, j)};
        w.tags = {{std::string(tags::kOsmAgType), "area"},
                  {std::string(tags::kOsmAgAreaType), "room"},
                  {std::string(tags::kLevel), std::to_string(level)},
                  {"name", "R" + std::to_string(level) + "-" + std::to_string(i) + "-" +
                               std::to_string(j)}};
        map.ways.emplace(w.id, std::move(w));
      }
    }
  }
  const std::vector<WallSegment> walls = all_wall_segments(map);
  const GeometryConfig geometry{spec.floor_height, true};

  for (int a = 0; a < spec.ap_count; ++a) {
    Sampled s = sample_in_room(rng, spec, spec.ap_wall_margin, spec.ap_height);
    const double z = s.position.z;
    s.position = map.snap(s.position).second;
    s.position.z = z;
    sc.truth.aps.push_back({bssid_for(a), s.position, s.level, a < spec.surveyed_count});
  }

  // Readings at one receiver position; pairs are appended in AP order.
  auto observe = [&](const LocalPoint3& where, std::int64_t node_id, ScanMap& scan,
                     std::vector<TruthPair>& pairs) {
    for (const auto& ap : sc.truth.aps) {
      TruthPair p;
      p.ap_id = ap.ap_id;
      p.node_id = node_id;
      p.distance = euclidean(ap.position, where);
      p.wall_count = count_crossings(ap.position, where, walls, geometry).count;
      p.rssi_clean = predict_rssi(spec.params, p.distance, p.wall_count);
      p.rssi = std::min(0.0, p.rssi_clean + spec.params.sigma * rng.gaussian());
      p.kept = p.rssi >= spec.sensitivity_floor;
      if (p.kept) scan[ap.ap_id] = p.rssi;
      pairs.push_back(std::move(p));
    }
  };

  // Receivers that hear nothing are redrawn.
  constexpr int kMaxDraws = 100;
  auto draw_receiver = [&](std::int64_t node_id, Sampled& s, ScanMap& scan,
                           std::vector<TruthPair>& pairs) {
    for (int attempt = 0; attempt < kMaxDraws; ++attempt) {
      s = sample_in_room(rng, spec, spec.fp_wall_margin, spec.antenna_height);
      const double z = s.position.z;
      s.position = map.snap(s.position).second;
      s.position.z = z;
      scan.clear();
      pairs.clear();
      observe(s.position, node_id, scan, pairs);
      if (!scan.empty()) return true;
    }
    return false;
  };

  for (int f = 0; f < spec.fingerprint_count; ++f) {
    Sampled s;
    ScanMap scan;
    std::vector<TruthPair> pairs;
    const std::int64_t id = next_id;
    if (!draw_receiver(id, s, scan, pairs)) continue;
    ++next_id;
    Fingerprint fp;
    fp.node_id = id;
    std::tie(fp.geo, fp.position) = map.snap(s.position);
    fp.position.z = s.position.z;
    fp.level = s.level;
    fp.rssi = std::map<std::string, double>(scan.begin(), scan.end());
    map.fingerprints.push_back(std::move(fp));
    sc.truth.pairs.insert(sc.truth.pairs.end(), pairs.begin(), pairs.end());
  }

  for (const auto& ap : sc.truth.aps) {
    if (!ap.surveyed) continue;
    ApRecord rec;
    rec.ap_id = ap.ap_id;
    rec.position = ap.position;
    rec.level = ap.level;
    rec.source = ApSource::kSurveyed;
    upsert_ap(map, std::move(rec));
  }

  for (int t = 0; t < spec.test_count; ++t) {
    Sampled s;
    TestRecord rec;
    std::vector<TruthPair> pairs;
    if (!draw_receiver(0, s, rec.scan, pairs)) continue;
    rec.truth = s.position;
    rec.level = s.level;
    rec.tag = "test";
    sc.testset.push_back(std::move(rec));
  }
  return sc;
}

HoldoutSplit holdout_split(const OsmAgMap& map, const HoldoutRegion& region) {
  if (region.empty()) throw DomainError("holdout region is empty");
  HoldoutSplit out;
  out.training = map;
  out.training.fingerprints.clear();
  for (const auto& fp : map.fingerprints) {
    if (region.contains(fp.position, fp.level)) {
      out.test.push_back({fp.position, fp.level, ScanMap(fp.rssi.begin(), fp.rssi.end()), "holdout"});
    } else {
      out.training.fingerprints.push_back(fp);
    }
  }
  if (!map.fingerprints.empty() && out.training.fingerprints.empty()) {
    throw EmptyError("empty_training", "holdout region contains every fingerprint");
  }
  return out;
}

}  // namespace wifiloc
