#pragma once

#include <span>
#include <vector>

#include "wifiloc/geometry.hpp"
#include "wifiloc/propagation.hpp"
#include "wifiloc/solver.hpp"

namespace wifiloc {

enum class RangeWeighting {
  kUniform,
  /// w = 1 / range^2: log-normal shadowing makes range error proportional to range.
  kInverseSquare,
  /// Unit weights on ln(|p - a| / range), the dB residual of the model.
  kLogRatio,
};

/// Solver settings for a weighting mode (selects the residual form).
SolverConfig with_weighting(SolverConfig cfg, RangeWeighting w);

double range_weight(RangeWeighting w, double range);

/// One RSSI reading between the unknown point and a known one.
struct RangeObservation {
  LocalPoint3 anchor;
  double rssi = 0.0;
};

struct RefineRound {
  SolveOutcome solution;
  std::vector<int> wall_counts;  ///< per observation, from the winning hypothesis
  double mean_wall_count = 0.0;
  /// sqrt(cost / observations); with inverse-square weights a relative
  /// residual, comparable across hypotheses whose ranges differ.
  double misfit = 0.0;
};

struct RefineSettings {
  /// Weighting of the t = 0 solve on LOS-inverted ranges. Inverse-square
  /// keeps the inflated NLOS ranges from dominating.
  RangeWeighting initial_weighting = RangeWeighting::kInverseSquare;
  /// Weighting of the refinement solves.
  RangeWeighting weighting = RangeWeighting::kLogRatio;
  /// Stencil of wall-count hypotheses around the previous estimate, this far
  /// apart; 0 evaluates the previous estimate only.
  double hypothesis_step = 1.0;
  /// Rings of the stencil; ring k is spaced hypothesis_step * 3^k.
  int hypothesis_rings = 3;
  /// Also offset z (free-z solves only).
  bool vertical = true;
  /// false inverts every reading as LOS.
  bool compensate = true;
};

/// Initial constraints: every reading inverted as LOS.
std::vector<RangeConstraint> los_constraints(std::span<const RangeObservation> obs,
                                             const PropagationParams& params,
                                             RangeWeighting weighting);

/// Recount walls from each hypothesis, re-invert NLOS readings with
/// compensation, re-solve from `prev`, and keep the lowest-misfit solve.
/// Hypotheses with an identical wall-count vector are solved once.
RefineRound refine_round(std::span<const RangeObservation> obs, const LocalPoint3& prev,
                         const PropagationParams& params, std::span<const WallSegment> walls,
                         const GeometryConfig& geometry, const SolverConfig& cfg,
                         const RefineSettings& settings);

}  // namespace wifiloc
