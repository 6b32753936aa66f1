// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "wifiloc/ap_localize.hpp"
#include "wifiloc/calibrate.hpp"
#include "wifiloc/evalreport.hpp"
#include "wifiloc/fingerprint.hpp"
#include "wifiloc/osmag.hpp"
#include "wifiloc/robot_localize.hpp"
#include "wifiloc/simulate.hpp"
#include "wifiloc/solver.hpp"

using namespace wifiloc;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::vector<ApRecord> truth_records(const TruthLedger& t) {
  std::vector<ApRecord> out;
  for (const auto& a : t.aps) out.push_back({a.ap_id, a.position, a.level, ApSource::kSurveyed});
  return out;
}

ScenarioSpec noise_free_spec() {
  ScenarioSpec spec;
  spec.params = {-28.79, 2.5, 10.77, 0.0};
  spec.seed = 1;
  return spec;
}

Verdict criterion1() {
  const ScenarioSpec spec = noise_free_spec();
  const Scenario sc = generate(spec);
  const auto t0 = Clock::now();
  CalibrationInput in;
  for (const auto& ap : sc.map.aps) {
    if (ap.source == ApSource::kSurveyed) in.aps.push_back(ap);
  }
  in.fingerprints = sc.map.fingerprints;
  in.walls = all_wall_segments(sc.map);
  in.geometry.floor_height = sc.map.floor_height;
  const PropagationParams got = calibrate(in);
  const double secs = seconds_since(t0);
  const double e0 = std::abs(got.rssi0 - spec.params.rssi0);
  const double e1 = std::abs(got.n - spec.params.n);
  const double e2 = std::abs(got.wall_loss - spec.params.wall_loss);
  const double worst = std::max({e0, e1, e2});
  return {worst <= 1e-6 && secs < 5.0,
          fmt("max |param error| %.3g (tol 1e-6), %zu surveyed APs, %.3f s (limit 5 s)", worst,
              in.aps.size(), secs)};
}

Verdict criterion2() {
  const ScenarioSpec spec = noise_free_spec();
  const Scenario sc = generate(spec);
  OsmAgMap map = sc.map;
  int min_heard = 1 << 30;
  for (const auto& ap : sc.truth.aps) {
    int heard = 0;
    for (const auto& fp : map.fingerprints) heard += fp.rssi.contains(ap.ap_id) ? 1 : 0;
    min_heard = std::min(min_heard, heard);
  }

  const auto t0 = Clock::now();
  ApLocalizeOptions opts;
  opts.iters = 10;
  opts.jobs = 0;
  const ApBatchResult batch = localize_all_aps(map, spec.params, opts);
  const double secs = seconds_since(t0);

  bool ok = min_heard >= 20 && batch.failures.empty() &&
            batch.estimates.size() == sc.truth.aps.size();
  double worst = 0.0;
  int nlos_aps = 0;
  int not_larger = 0;
  for (const auto& est : batch.estimates) {
    const TruthAp* t = sc.truth.find_ap(est.ap_id);
    if (!t) {
      ok = false;
      continue;
    }
    const double refined = euclidean(est.position, t->position);
    const double initial = euclidean(est.initial_position(), t->position);
    worst = std::max(worst, refined);
    const bool has_nlos = std::any_of(sc.truth.pairs.begin(), sc.truth.pairs.end(),
                                      [&](const TruthPair& p) {
                                        return p.ap_id == est.ap_id && p.kept && p.wall_count > 0;
                                      });
    if (has_nlos) {
      ++nlos_aps;
      if (!(initial > refined)) ++not_larger;
    }
  }
  ok = ok && worst <= 0.05 && not_larger == 0 && secs < 10.0;
  return {ok, fmt("%zu/%zu APs, min %d fingerprints/AP, worst error %.2e m (tol 0.05), "
                  "t=0 not larger on %d of %d NLOS APs, %.2f s (limit 10 s)",
                  batch.estimates.size(), sc.truth.aps.size(), min_heard, worst, not_larger,
                  nlos_aps, secs)};
}

Verdict criterion3() {
  const auto t0 = Clock::now();
  double initial = 0.0;
  double refined = 0.0;
  int count = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    ScenarioSpec spec;
    spec.seed = seed;
    const Scenario sc = generate(spec);
    OsmAgMap map = sc.map;
    ApLocalizeOptions opts;
    opts.jobs = 0;
    const ApBatchResult batch = localize_all_aps(map, spec.params, opts);
    const ApErrorReport rep = ap_error_report(batch.estimates, truth_records(sc.truth));
    for (const auto& row : rep.rows) {
      initial += row.initial_error;
      refined += row.refined_error;
      ++count;
    }
  }
  const double secs = seconds_since(t0);
  initial /= count;
  refined /= count;
  return {refined <= 0.8 * initial && secs < 120.0,
          fmt("mean initial %.3f m, refined %.3f m, ratio %.3f (limit 0.8), %d APs, %.1f s "
              "(limit 120 s)",
              initial, refined, refined / initial, count, secs)};
}

// Andrew's monotone chain; counter-clockwise, collinear points dropped.
std::vector<LocalPoint3> convex_hull(std::vector<LocalPoint3> pts) {
  std::sort(pts.begin(), pts.end(), [](const LocalPoint3& a, const LocalPoint3& b) {
    return a.x < b.x || (a.x == b.x && a.y < b.y);
  });
  auto cross = [](const LocalPoint3& o, const LocalPoint3& a, const LocalPoint3& b) {
    return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
  };
  if (pts.size() < 3) return pts;
  std::vector<LocalPoint3> h(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(h[k - 2], h[k - 1], pts[i]) <= 0) --k;
    h[k++] = pts[i];
  }
  h.resize(k - 1);
  return h;
}

bool inside_hull(const std::vector<LocalPoint3>& hull, const LocalPoint3& p) {
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const LocalPoint3& a = hull[i];
    const LocalPoint3& b = hull[(i + 1) % hull.size()];
    if ((b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) < -1e-9) return false;
  }
  return true;
}

struct ChainTotals {
  double model = 0.0;
  double knn = 0.0;
  int misses = 0;
  int outside_hull = 0;
  int knn_estimates = 0;
};

// Fingerprints in the east wing (both floors) are withheld from the map.
const HoldoutRegion kWing{32.0, 48.0, 0.0, 32.0, std::nullopt};

ScenarioSpec chain_spec(std::uint64_t seed) {
  ScenarioSpec spec;
  spec.seed = seed;
  spec.ap_count = 48;
  spec.test_count = 200;
  return spec;
}

// Estimate APs on `map`, then localize `tests` with both methods.
void run_chain(OsmAgMap map, const PropagationParams& params, const std::vector<TestRecord>& tests,
               ChainTotals& totals) {
  ApLocalizeOptions ao;
  ao.jobs = 0;
  localize_all_aps(map, params, ao);
  const RobotLocalizer loc(map, params);
  const FingerprintIndex idx = build_index(map);
  std::vector<LocalPoint3> pts;
  for (const auto& fp : map.fingerprints) pts.push_back(fp.position);
  const std::vector<LocalPoint3> hull = convex_hull(pts);

  const auto model = evaluate(tests, [&](const ScanMap& s) { return loc.localize(s); }, 0);
  const auto knn = evaluate(tests, [&](const ScanMap& s) { return knn_localize(idx, s); }, 0);
  totals.model += model.stats.mean;
  totals.knn += knn.stats.mean;
  totals.misses += model.stats.misses + knn.stats.misses;
  for (const auto& r : knn.results) {
    ++totals.knn_estimates;
    if (!inside_hull(hull, r.position)) ++totals.outside_hull;
  }
}

Verdict criterion4() {
  ChainTotals t;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const ScenarioSpec spec = chain_spec(seed);
    const Scenario sc = generate(spec);
    const HoldoutSplit split = holdout_split(sc.map, kWing);
    run_chain(split.training, spec.params, split.test, t);
  }
  const double ratio = t.model / t.knn;
  return {ratio <= 0.5 && t.outside_hull == 0 && t.misses == 0,
          fmt("holdout mean model %.3f m, KNN %.3f m, ratio %.3f (limit 0.5); "
              "KNN outside hull %d of %d; misses %d",
              t.model / 20, t.knn / 20, ratio, t.outside_hull, t.knn_estimates, t.misses)};
}

Verdict criterion5() {
  ChainTotals t;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const ScenarioSpec spec = chain_spec(seed);
    const Scenario sc = generate(spec);
    run_chain(sc.map, spec.params, sc.testset, t);
  }
  const double ratio = t.model / t.knn;
  return {ratio <= 1.2 && t.misses == 0,
          fmt("in-coverage mean model %.3f m, KNN %.3f m, ratio %.3f (limit 1.2); misses %d",
              t.model / 20, t.knn / 20, ratio, t.misses)};
}

Verdict criterion6() {
  ScenarioSpec spec;
  spec.ap_count = 48;
  spec.fingerprint_count = 1491;
  const Scenario sc = generate(spec);
  OsmAgMap map = sc.map;
  ApLocalizeOptions ao;
  ao.jobs = 0;
  localize_all_aps(map, spec.params, ao);
  std::size_t fp_bytes = 0;
  std::size_t ap_bytes = 0;
  std::size_t ap_max = 0;
  for (const auto& fp : map.fingerprints) fp_bytes += serialized_size(fp);
  for (const auto& ap : map.aps) {
    ap_bytes += serialized_size(ap);
    ap_max = std::max(ap_max, serialized_size(ap));
  }
  const bool ok = map.aps.size() == 48 && map.fingerprints.size() == 1491 &&
                  10 * ap_bytes <= fp_bytes && ap_max <= 1024;
  return {ok, fmt("%zu APs = %zu B, %zu fingerprints = %zu B, ratio 1/%.1f (limit 1/10), "
                  "largest AP %zu B (limit 1024)",
                  map.aps.size(), ap_bytes, map.fingerprints.size(), fp_bytes,
                  static_cast<double>(fp_bytes) / static_cast<double>(ap_bytes), ap_max)};
}

std::vector<RangeConstraint> exact_ranges(const std::vector<LocalPoint3>& anchors,
                                          const LocalPoint3& p) {
  std::vector<RangeConstraint> cs;
  for (const auto& a : anchors) cs.push_back({a, euclidean(a, p), 1.0});
  return cs;
}

Verdict criterion7() {
  Rng rng(7);
  double worst_jac = 0.0;
  for (int i = 0; i < 100; ++i) {
    std::vector<RangeConstraint> cs;
    for (int k = 0; k < 6; ++k) {
      cs.push_back({{rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(0, 6)},
                    rng.uniform(1, 30), 1.0});
    }
    const LocalPoint3 p{rng.uniform(-20, 20), rng.uniform(-20, 20), rng.uniform(0, 6)};
    for (ResidualForm form : {ResidualForm::kLinear, ResidualForm::kLogRatio}) {
      const Eigen::MatrixXd j = range_jacobian(cs, p, form);
      const double h = 1e-6;
      for (int c = 0; c < 3; ++c) {
        LocalPoint3 dp{};
        (c == 0 ? dp.x : c == 1 ? dp.y : dp.z) = h;
        const Eigen::VectorXd fd =
            (range_residuals(cs, p + dp, form) - range_residuals(cs, p - dp, form)) / (2 * h);
        for (int r = 0; r < fd.size(); ++r) {
          const double rel = std::abs(fd(r) - j(r, c)) / std::max(1.0, std::abs(j(r, c)));
          worst_jac = std::max(worst_jac, rel);
        }
      }
    }
  }

  // Anchors placed symmetrically about the target.
  const std::vector<std::vector<LocalPoint3>> fixtures = {
      {{10, 0, 1}, {-10, 0, 1}, {0, 10, 1}, {0, -10, 1}},
      {{5, 5, 0}, {-5, 5, 0}, {5, -5, 0}, {-5, -5, 0}, {0, 0, 6}},
      {{4, 0, -3}, {-4, 0, -3}, {0, 4, 3}, {0, -4, 3}},
      {{1, 1, 1}, {1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}},
      {{7, 0, 0}, {-3.5, 6.0621778264910704, 0}, {-3.5, -6.0621778264910704, 0}, {0, 0, 7},
       {0, 0, -7}},
  };
  double worst_fixture = 0.0;
  for (const auto& anchors : fixtures) {
    for (const LocalPoint3& target : {LocalPoint3{0, 0, 0}, LocalPoint3{0.5, -0.25, 0.1}}) {
      const auto cs = exact_ranges(anchors, target);
      const SolveOutcome s = solve_ranges(cs, target + LocalPoint3{1.5, -1.0, 0.5});
      worst_fixture = std::max(worst_fixture, euclidean(s.position, target));
    }
  }

  double worst_shift = 0.0;
  for (int i = 0; i < 20; ++i) {
    std::vector<RangeConstraint> cs;
    for (int k = 0; k < 5; ++k) {
      cs.push_back({{rng.uniform(-15, 15), rng.uniform(-15, 15), rng.uniform(0, 6)},
                    rng.uniform(2, 20), 1.0});
    }
    const LocalPoint3 init{rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(0, 3)};
    const LocalPoint3 shift{rng.uniform(-50, 50), rng.uniform(-50, 50), rng.uniform(-5, 5)};
    auto moved = cs;
    for (auto& c : moved) c.anchor = c.anchor + shift;
    const SolveOutcome a = solve_ranges(cs, init);
    const SolveOutcome b = solve_ranges(moved, init + shift);
    worst_shift = std::max(worst_shift, euclidean(b.position - shift, a.position));
  }

  return {worst_jac <= 1e-5 && worst_fixture <= 1e-6 && worst_shift <= 1e-9,
          fmt("Jacobian rel error %.2e (tol 1e-5), symmetric fixtures %.2e m (tol 1e-6), "
              "translation %.2e m (tol 1e-9)",
              worst_jac, worst_fixture, worst_shift)};
}

struct Rect {
  LocalPoint3 corner[4];
};

bool inside_rect(const Rect& r, double x, double y) {
  for (int i = 0; i < 4; ++i) {
    const LocalPoint3& a = r.corner[i];
    const LocalPoint3& b = r.corner[(i + 1) % 4];
    if ((b.x - a.x) * (y - a.y) - (b.y - a.y) * (x - a.x) < 0) return false;
  }
  return true;
}

double point_segment_distance(const LocalPoint3& p, const LocalPoint3& a, const LocalPoint3& b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / (dx * dx + dy * dy), 0.0, 1.0);
  return std::hypot(a.x + t * dx - p.x, a.y + t * dy - p.y);
}

Verdict criterion8() {
  Rng rng(8);
  const double h = kDefaultFloorHeight;
  int disagreements = 0;
  int configs = 0;
  int redrawn = 0;
  while (configs < 1000) {
    const int nrect = 1 + rng.index(4);
    std::vector<Rect> rects;
    std::vector<WallSegment> walls;
    for (int k = 0; k < nrect; ++k) {
      const double cx = rng.uniform(-10, 10);
      const double cy = rng.uniform(-10, 10);
      const double hw = rng.uniform(0.5, 5);
      const double hh = rng.uniform(0.5, 5);
      const double th = rng.uniform(0, 3.14159);
      const double c = std::cos(th);
      const double s = std::sin(th);
      Rect r;
      const double ox[4] = {-hw, hw, hw, -hw};
      const double oy[4] = {-hh, -hh, hh, hh};
      for (int i = 0; i < 4; ++i) {
        r.corner[i] = {cx + c * ox[i] - s * oy[i], cy + s * ox[i] + c * oy[i], 0.0};
      }
      rects.push_back(r);
      for (int i = 0; i < 4; ++i) {
        walls.push_back({r.corner[i], r.corner[(i + 1) % 4], 0, 0.0, h});
      }
    }
    const LocalPoint3 from{rng.uniform(-15, 15), rng.uniform(-15, 15), rng.uniform(0.1, h - 0.1)};
    const LocalPoint3 to{rng.uniform(-15, 15), rng.uniform(-15, 15), rng.uniform(0.1, h - 0.1)};

    // Too close to a corner or an endpoint for the sampling resolution.
    bool near_degenerate = false;
    for (const auto& r : rects) {
      for (const auto& c : r.corner) near_degenerate |= point_segment_distance(c, from, to) < 1e-3;
    }
    for (const auto& w : walls) {
      near_degenerate |= point_segment_distance(from, w.a, w.b) < 1e-3;
      near_degenerate |= point_segment_distance(to, w.a, w.b) < 1e-3;
    }
    if (near_degenerate) {
      ++redrawn;
      continue;
    }

    const int samples = 100000;
    int expected = 0;
    for (const auto& r : rects) {
      bool prev = inside_rect(r, from.x, from.y);
      for (int i = 1; i <= samples; ++i) {
        const double t = static_cast<double>(i) / samples;
        const bool cur = inside_rect(r, from.x + t * (to.x - from.x), from.y + t * (to.y - from.y));
        expected += cur != prev ? 1 : 0;
        prev = cur;
      }
    }
    const int got = count_crossings(from, to, walls).count;
    disagreements += got != expected ? 1 : 0;
    ++configs;
  }
  return {disagreements == 0, fmt("%d disagreements over %d configurations (%d near-degenerate "
                                  "draws replaced)",
                                  disagreements, configs, redrawn)};
}

bool round_trips(const OsmAgMap& map) {
  const std::string text = serialize_map(map);
  const OsmAgMap back = parse_map(text, {map.floor_height});
  return back == map && serialize_map(back) == text;
}

Verdict criterion9() {
  int maps = 0;
  int failures = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    ScenarioSpec spec = chain_spec(seed);
    spec.params.sigma = seed % 2 ? 4.0 : 0.0;
    const Scenario sc = generate(spec);
    failures += round_trips(sc.map) ? 0 : 1;
    failures += round_trips(holdout_split(sc.map, kWing).training) ? 0 : 1;
    OsmAgMap with_aps = sc.map;
    ApLocalizeOptions ao;
    ao.iters = 2;
    localize_all_aps(with_aps, spec.params, ao);
    store_params(with_aps, spec.params);
    failures += round_trips(with_aps) ? 0 : 1;
    maps += 3;
  }

  std::ifstream in(WIFILOC_TEST_DATA "/fixture.osmag");
  std::stringstream buf;
  buf << in.rdbuf();
  const OsmAgMap fixture = parse_map(buf.str());
  const std::string text = serialize_map(fixture);
  const bool kept = text.find("survey:operator") != std::string::npos &&
                    text.find("note:fixme") != std::string::npos &&
                    text.find("vendor") != std::string::npos &&
                    text.find("action='modify'") != std::string::npos && !fixture.aps.empty() &&
                    !fixture.fingerprints.empty();
  const bool fixture_ok = kept && round_trips(fixture);
  ++maps;
  failures += fixture_ok ? 0 : 1;
  return {failures == 0,
          fmt("%d of %d maps failed (fixture with unknown tags: %s)", failures, maps,
              fixture_ok ? "identity" : "mismatch")};
}

Verdict criterion10() {
  ScenarioSpec spec;
  spec.rooms_x = 22;
  spec.rooms_y = 22;
  spec.ap_count = 30;
  spec.fingerprint_count = 100;
  const Scenario sc = generate(spec);
  OsmAgMap map = sc.map;
  const std::vector<WallSegment> walls = all_wall_segments(map);

  // 30 APs within earshot of the robot, spread over both floors.
  const LocalPoint3 robot{spec.room_size * 11.5, spec.room_size * 10.5, spec.antenna_height};
  Rng rng(10);
  ScanMap scan;
  for (int i = 0; i < 30; ++i) {
    const double r = rng.uniform(2.0, 8.0);
    const double th = rng.uniform(0.0, 6.283185307179586);
    const int level = i % 2;
    const LocalPoint3 p{robot.x + r * std::cos(th), robot.y + r * std::sin(th),
                        level * map.floor_height + spec.ap_height};
    const std::string id = fmt("02:00:00:00:10:%02x", i);
    upsert_ap(map, {id, p, level});
    const int n = count_crossings(robot, p, walls, {map.floor_height, true}).count;
    scan[id] = predict_rssi(spec.params, euclidean(robot, p), n);
  }
  const RobotLocalizer loc(map, spec.params);
  std::vector<double> ms;
  std::size_t used = 0;
  for (int i = 0; i < 100; ++i) {
    const auto t0 = Clock::now();
    used = loc.localize(scan).used_aps.size();
    ms.push_back(seconds_since(t0) * 1e3);
  }
  std::nth_element(ms.begin(), ms.begin() + 50, ms.end());
  const double median = ms[50];
  const bool ok = loc.walls().size() >= 2000 && used == 30 && median < 50.0;
  return {ok, fmt("median %.2f ms over 100 calls (limit 50 ms), %zu of 30 APs used, "
                  "%zu wall segments",
                  median, used, loc.walls().size())};
}

}  // namespace

int main() {
  const std::vector<std::function<Verdict()>> criteria = {
      criterion1, criterion2, criterion3, criterion4, criterion5,
      criterion6, criterion7, criterion8, criterion9, criterion10,
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i]();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += v.pass ? 0 : 1;
    std::printf("%s criterion %zu: %s\n", v.pass ? "PASS" : "FAIL", i + 1, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
