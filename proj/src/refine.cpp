#include "wifiloc/refine.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>

namespace wifiloc {

double range_weight(RangeWeighting w, double range) {
  return w == RangeWeighting::kInverseSquare ? 1.0 / (range * range) : 1.0;
}

SolverConfig with_weighting(SolverConfig cfg, RangeWeighting w) {
  cfg.residual = w == RangeWeighting::kLogRatio ? ResidualForm::kLogRatio : ResidualForm::kLinear;
  return cfg;
}

std::vector<RangeConstraint> los_constraints(std::span<const RangeObservation> obs,
                                             const PropagationParams& params,
                                             RangeWeighting weighting) {
  std::vector<RangeConstraint> cs;
  cs.reserve(obs.size());
  for (const auto& o : obs) {
    const double r = invert_distance_los(params, o.rssi);
    cs.push_back({o.anchor, r, range_weight(weighting, r)});
  }
  return cs;
}

RefineRound refine_round(std::span<const RangeObservation> obs, const LocalPoint3& prev,
                         const PropagationParams& params, std::span<const WallSegment> walls,
                         const GeometryConfig& geometry, const SolverConfig& base_cfg,
                         const RefineSettings& settings) {
  const SolverConfig cfg = with_weighting(base_cfg, settings.weighting);
  std::vector<LocalPoint3> stencil{{0.0, 0.0, 0.0}};
  const bool vertical = settings.vertical && !cfg.fixed_z;
  double h = settings.hypothesis_step;
  for (int ring = 0; h > 0.0 && ring < settings.hypothesis_rings; ++ring, h *= 3.0) {
    for (double dz : {0.0, -h, h}) {
      if (dz != 0.0 && !vertical) continue;
      for (double dy : {0.0, -h, h}) {
        for (double dx : {0.0, -h, h}) {
          if (dx != 0.0 || dy != 0.0 || dz != 0.0) stencil.push_back({dx, dy, dz});
        }
      }
    }
  }

  std::vector<RangeConstraint> cs(obs.size());
  std::vector<int> counts(obs.size());
  std::set<std::vector<int>> tried;
  std::optional<RefineRound> best;
  for (const LocalPoint3& offset : stencil) {
    LocalPoint3 probe = prev + offset;
    if (cfg.xy_bounds) {
      const auto& [lo, hi] = *cfg.xy_bounds;
      probe.x = std::clamp(probe.x, lo.x, hi.x);
      probe.y = std::clamp(probe.y, lo.y, hi.y);
    }
    if (cfg.fixed_z) probe.z = *cfg.fixed_z;
    if (cfg.z_min) probe.z = std::max(probe.z, *cfg.z_min);
    if (cfg.z_max) probe.z = std::min(probe.z, *cfg.z_max);
    for (std::size_t i = 0; i < obs.size(); ++i) {
      counts[i] = count_crossings(probe, obs[i].anchor, walls, geometry).count;
    }
    if (!tried.insert(counts).second) continue;

    double wall_sum = 0.0;
    for (std::size_t i = 0; i < obs.size(); ++i) {
      const int n = settings.compensate ? counts[i] : 0;
      wall_sum += counts[i];
      // LOS readings keep their uncompensated range.
      const double r = n > 0 ? invert_distance_compensated(params, obs[i].rssi, n)
                             : invert_distance_los(params, obs[i].rssi);
      cs[i] = {obs[i].anchor, r, range_weight(settings.weighting, r)};
    }
    SolveOutcome sol = solve_ranges(cs, prev, cfg);
    const double misfit = std::sqrt(sol.cost / static_cast<double>(obs.size()));
    if (!best || misfit < best->misfit) {
      best = RefineRound{sol, counts, wall_sum / static_cast<double>(obs.size()), misfit};
    }
  }
  return std::move(*best);
}

}  // namespace wifiloc
