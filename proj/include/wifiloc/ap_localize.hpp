#pragma once

#include <span>
#include <string>
#include <vector>

#include "wifiloc/geometry.hpp"
#include "wifiloc/osmag.hpp"
#include "wifiloc/propagation.hpp"
#include "wifiloc/refine.hpp"
#include "wifiloc/solver.hpp"

namespace wifiloc {

struct ApTraceStep {
  LocalPoint3 position;
  double mean_wall_count = 0.0;
};

struct ApEstimate {
  std::string ap_id;
  LocalPoint3 position;
  int iteration = 0;
  double residual_rms = 0.0;
  /// trace[0] is the trilateration estimate, trace[t] the t-th refinement.
  std::vector<ApTraceStep> trace;
  int measurements = 0;

  const LocalPoint3& initial_position() const { return trace.front().position; }
};

struct ApLocalizeOptions {
  int iters = 10;
  /// Range weighting and the wall-count hypothesis stencil.
  RefineSettings refine{.hypothesis_rings = 1};
  /// Stop once the refinement moves less than this; <= 0 keeps the fixed count.
  double early_exit = 0.0;
  /// Readings below this are dropped before inversion.
  double weak_signal_floor = -90.0;
  /// z is clamped to [lowest floor - below, highest floor + above].
  double z_clamp_below = 1.0;
  double z_clamp_above = 4.0;
  /// Keep x and y inside the bounding box of the walls, grown by this much;
  /// negative disables the clamp.
  double footprint_margin = 1.0;
  GeometryConfig geometry;
  SolverConfig solver;
  unsigned jobs = 1;
};

struct ApFailure {
  std::string ap_id;
  std::string code;
  std::string message;
};

struct ApBatchResult {
  std::vector<ApEstimate> estimates;  ///< ascending ap_id
  std::vector<ApFailure> failures;
};

/// Trilateration from LOS-inverted ranges followed by `opts.iters` rounds of
/// wall-count refresh, NLOS compensation and re-solve. Solver errors are
/// rethrown with the AP id prefixed to the message.
ApEstimate localize_ap(const std::string& ap_id, std::span<const Fingerprint> fingerprints,
                       const PropagationParams& params, std::span<const WallSegment> walls,
                       const ApLocalizeOptions& opts = {});

/// Estimate every AP heard by at least 3 usable fingerprints and upsert the
/// results as estimated records. Surveyed records are left untouched.
ApBatchResult localize_all_aps(OsmAgMap& map, const PropagationParams& params,
                               const ApLocalizeOptions& opts = {});

}  // namespace wifiloc
