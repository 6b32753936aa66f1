#include "wifiloc/robot_localize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "wifiloc/error.hpp"
#include "wifiloc/parallel.hpp"

namespace wifiloc {

ScanMap average_scan(const RssiScan& raw, int min_samples) {
  if (!(raw.window > 0.0)) throw DomainError("scan window must be positive");
  if (raw.readings.empty()) throw InsufficientSignalError("scan has no readings");
  double newest = -std::numeric_limits<double>::infinity();
  for (const auto& r : raw.readings) newest = std::max(newest, r.t);

  std::map<std::string, std::pair<double, int>> acc;
  for (const auto& r : raw.readings) {
    if (r.t < newest - raw.window) continue;
    auto& [sum, count] = acc[r.ap_id];
    sum += r.rssi;
    ++count;
  }
  ScanMap out;
  for (const auto& [id, sc] : acc) {
    if (sc.second >= min_samples) out[id] = sc.first / sc.second;
  }
  if (out.empty()) {
    throw InsufficientSignalError("no AP has " + std::to_string(min_samples) +
                                  " readings inside the scan window");
  }
  return out;
}

RobotLocalizer::RobotLocalizer(const OsmAgMap& map, PropagationParams params,
                               RobotLocalizeOptions opts)
    : walls_(all_wall_segments(map)), params_(params), opts_(std::move(opts)) {
  for (const auto& ap : map.aps) aps_[ap.ap_id] = ap.position;
  levels_ = opts_.levels.empty() ? map.levels() : opts_.levels;
  if (levels_.empty()) levels_ = {0};
  geometry_.floor_height = map.floor_height;
}

LocalizationResult RobotLocalizer::localize(const ScanMap& scan) const {
  std::vector<RangeObservation> obs;
  std::vector<std::string> ids;
  std::vector<std::string> unknown;
  for (const auto& [id, dbm] : scan) {
    if (dbm < opts_.weak_signal_floor) continue;
    auto it = aps_.find(id);
    if (it == aps_.end()) {
      unknown.push_back(id);
      continue;
    }
    obs.push_back({it->second, dbm});
    ids.push_back(id);
  }
  if (obs.size() < 3) {
    std::string msg = "scan resolves to " + std::to_string(obs.size()) + " known APs, need 3";
    if (!unknown.empty()) {
      msg += "; unknown:";
      for (const auto& u : unknown) msg += " " + u;
    }
    throw InsufficientAnchorsError(unknown, msg);
  }

  std::optional<LocalizationResult> best;
  for (int level : levels_) {
    LocalizationResult r = localize_on_floor(obs, ids, level);
    if (!best || r.misfit < best->misfit) best = std::move(r);
  }
  return *best;
}

LocalizationResult RobotLocalizer::localize_on_floor(const std::vector<RangeObservation>& obs,
                                                     const std::vector<std::string>& ids,
                                                     int level) const {
  SolverConfig cfg = opts_.solver;
  cfg.fixed_z = level * geometry_.floor_height + opts_.antenna_height;

  LocalizationResult out;
  out.level = level;
  const std::vector<RangeConstraint> cs =
      los_constraints(obs, params_, opts_.refine.initial_weighting);
  SolveOutcome sol = solve_ranges(cs, linear_init(cs, cfg.fixed_z),
                                  with_weighting(cfg, opts_.refine.initial_weighting));
  std::vector<int> counts(obs.size(), 0);
  out.misfit = std::sqrt(sol.cost / static_cast<double>(obs.size()));
  for (int t = 1; t <= opts_.max_iters; ++t) {
    const LocalPoint3 prev = sol.position;
    RefineRound round = refine_round(obs, prev, params_, walls_, geometry_, cfg, opts_.refine);
    sol = round.solution;
    counts = std::move(round.wall_counts);
    out.misfit = round.misfit;
    out.iterations = t;
    const double step = euclidean(prev, sol.position);
    out.step_norms.push_back(step);
    if (step < opts_.epsilon) {
      out.converged = true;
      break;
    }
  }

  out.position = sol.position;
  out.residual_rms = sol.residual_rms;
  for (std::size_t k = 0; k < obs.size(); ++k) {
    const int n = opts_.refine.compensate ? counts[k] : 0;
    const double range = n > 0 ? invert_distance_compensated(params_, obs[k].rssi, n)
                               : invert_distance_los(params_, obs[k].rssi);
    out.used_aps.push_back({ids[k], range, counts[k]});
  }
  return out;
}

LocalizationResult localize_robot(const ScanMap& scan, const OsmAgMap& map,
                                  const PropagationParams& params, const RobotLocalizeOptions& opts) {
  return RobotLocalizer(map, params, opts).localize(scan);
}

EvaluationResult evaluate(std::span<const TestRecord> testpoints, const Localizer& localize,
                          unsigned jobs) {
  EvaluationResult out;
  out.errors.assign(testpoints.size(), std::numeric_limits<double>::quiet_NaN());
  out.results.resize(testpoints.size());
  parallel_for(testpoints.size(), jobs, [&](std::size_t i) {
    try {
      out.results[i] = localize(testpoints[i].scan);
      out.errors[i] = euclidean(out.results[i].position, testpoints[i].truth);
    } catch (const Error&) {
      // recorded as a miss
    }
  });
  std::vector<double> hits;
  int misses = 0;
  for (double e : out.errors) {
    if (std::isnan(e)) {
      ++misses;
    } else {
      hits.push_back(e);
    }
  }
  out.stats = summarize_errors(hits, misses);
  return out;
}

ErrorStats evaluate_localization(std::span<const TestRecord> testpoints, const OsmAgMap& map,
                                 const PropagationParams& params, const RobotLocalizeOptions& opts) {
  const RobotLocalizer localizer(map, params, opts);
  return evaluate(testpoints, [&localizer](const ScanMap& s) { return localizer.localize(s); })
      .stats;
}

}  // namespace wifiloc
