#include "wifiloc/ap_localize.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <set>
#include <variant>

#include "wifiloc/error.hpp"
#include "wifiloc/parallel.hpp"

namespace wifiloc {

namespace {

SolveOutcome solve_tagged(const std::string& ap_id, std::span<const RangeConstraint> cs,
                          const LocalPoint3& init, const SolverConfig& cfg) {
  try {
    return solve_ranges(cs, init, cfg);
  } catch (const DegenerateGeometryError& e) {
    throw DegenerateGeometryError("AP " + ap_id + ": " + e.what(), e.best_effort());
  }
}

}  // namespace

ApEstimate localize_ap(const std::string& ap_id, std::span<const Fingerprint> fingerprints,
                       const PropagationParams& params, std::span<const WallSegment> walls,
                       const ApLocalizeOptions& opts) {
  if (opts.iters < 0) throw DomainError("iteration count must be non-negative");
  std::vector<RangeObservation> obs;
  int lowest = std::numeric_limits<int>::max();
  int highest = std::numeric_limits<int>::min();
  for (const auto& fp : fingerprints) {
    auto it = fp.rssi.find(ap_id);
    if (it == fp.rssi.end() || it->second < opts.weak_signal_floor) continue;
    obs.push_back({fp.position, it->second});
    lowest = std::min(lowest, fp.level);
    highest = std::max(highest, fp.level);
  }
  if (obs.size() < 3) {
    throw UnderdeterminedError("AP " + ap_id + ": heard by " + std::to_string(obs.size()) +
                               " usable fingerprints, need 3");
  }

  SolverConfig cfg = opts.solver;
  cfg.fixed_z.reset();
  cfg.z_min = lowest * opts.geometry.floor_height - opts.z_clamp_below;
  cfg.z_max = highest * opts.geometry.floor_height + opts.z_clamp_above;
  if (opts.footprint_margin >= 0.0 && !walls.empty()) {
    LocalPoint3 lo = walls.front().a;
    LocalPoint3 hi = lo;
    for (const auto& w : walls) {
      for (const LocalPoint3& q : {w.a, w.b}) {
        lo.x = std::min(lo.x, q.x);
        lo.y = std::min(lo.y, q.y);
        hi.x = std::max(hi.x, q.x);
        hi.y = std::max(hi.y, q.y);
      }
    }
    const LocalPoint3 m{opts.footprint_margin, opts.footprint_margin, 0.0};
    cfg.xy_bounds = {lo - m, hi + m};
  }

  const std::vector<RangeConstraint> cs =
      los_constraints(obs, params, opts.refine.initial_weighting);

  ApEstimate est;
  est.ap_id = ap_id;
  est.measurements = static_cast<int>(obs.size());

  LocalPoint3 init;
  try {
    init = linear_init(cs);
  } catch (const DegenerateGeometryError& e) {
    throw DegenerateGeometryError("AP " + ap_id + ": " + e.what(), e.best_effort());
  }
  SolveOutcome sol =
      solve_tagged(ap_id, cs, init, with_weighting(cfg, opts.refine.initial_weighting));
  est.trace.push_back({sol.position, 0.0});

  for (int t = 1; t <= opts.iters; ++t) {
    const LocalPoint3 prev = est.trace.back().position;
    RefineRound round;
    try {
      round = refine_round(obs, prev, params, walls, opts.geometry, cfg, opts.refine);
    } catch (const DegenerateGeometryError& e) {
      throw DegenerateGeometryError("AP " + ap_id + ": " + e.what(), e.best_effort());
    }
    sol = round.solution;
    est.trace.push_back({sol.position, round.mean_wall_count});
    if (opts.early_exit > 0.0 && euclidean(prev, sol.position) < opts.early_exit) break;
  }

  est.position = est.trace.back().position;
  est.iteration = static_cast<int>(est.trace.size()) - 1;
  est.residual_rms = sol.residual_rms;
  return est;
}

ApBatchResult localize_all_aps(OsmAgMap& map, const PropagationParams& params,
                               const ApLocalizeOptions& opts) {
  ApBatchResult result;
  std::set<std::string> ids;
  std::set<int> levels;
  for (const auto& fp : map.fingerprints) {
    for (const auto& [ap, dbm] : fp.rssi) ids.insert(ap);
    levels.insert(fp.level);
  }
  if (ids.empty()) return result;

  ApLocalizeOptions local = opts;
  local.geometry.floor_height = map.floor_height;
  const std::vector<WallSegment> walls = all_wall_segments(map);
  const std::vector<std::string> order(ids.begin(), ids.end());

  std::vector<std::variant<std::monostate, ApEstimate, ApFailure>> slots(order.size());
  parallel_for(order.size(), opts.jobs, [&](std::size_t i) {
    try {
      slots[i] = localize_ap(order[i], map.fingerprints, params, walls, local);
    } catch (const Error& e) {
      slots[i] = ApFailure{order[i], e.code(), e.what()};
    }
  });

  for (auto& slot : slots) {
    if (auto* est = std::get_if<ApEstimate>(&slot)) {
      result.estimates.push_back(std::move(*est));
    } else if (auto* fail = std::get_if<ApFailure>(&slot)) {
      result.failures.push_back(std::move(*fail));
    }
  }

  for (const auto& est : result.estimates) {
    const ApRecord* existing = map.find_ap(est.ap_id);
    if (existing && existing->source == ApSource::kSurveyed) continue;
    ApRecord rec;
    rec.ap_id = est.ap_id;
    rec.position = est.position;
    rec.level = std::clamp(level_of_height(est.position.z, map.floor_height), *levels.begin(),
                           *levels.rbegin());
    rec.source = ApSource::kEstimated;
    if (existing) rec.tags = existing->tags;
    upsert_ap(map, std::move(rec));
  }
  return result;
}

}  // namespace wifiloc
