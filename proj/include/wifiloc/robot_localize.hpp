#pragma once

#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "wifiloc/geometry.hpp"
#include "wifiloc/metrics.hpp"
#include "wifiloc/osmag.hpp"
#include "wifiloc/propagation.hpp"
#include "wifiloc/refine.hpp"
#include "wifiloc/solver.hpp"

namespace wifiloc {

/// Averaged scan: AP id -> dBm.
using ScanMap = std::map<std::string, double>;

struct ScanReading {
  std::string ap_id;
  double rssi = 0.0;
  double t = 0.0;  ///< seconds
};

struct RssiScan {
  std::vector<ScanReading> readings;
  double window = 4.0;  ///< seconds, counted back from the newest reading
};

/// Per-AP mean of the readings inside the window; APs with fewer than
/// `min_samples` readings are dropped. Throws InsufficientSignalError when
/// nothing survives.
ScanMap average_scan(const RssiScan& raw, int min_samples = 2);

struct UsedAp {
  std::string ap_id;
  double range = 0.0;
  int wall_count = 0;
};

struct LocalizationResult {
  LocalPoint3 position;
  int level = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<UsedAp> used_aps;
  double residual_rms = 0.0;
  /// Scale-free fit quality used to rank floor hypotheses (see RefineRound).
  double misfit = 0.0;
  /// |p(t) - p(t-1)| for t = 1..iterations.
  std::vector<double> step_norms;
};

struct RobotLocalizeOptions {
  double epsilon = 0.1;  ///< outer-loop step threshold, meters
  int max_iters = 10;    ///< outer-loop refinement budget
  SolverConfig solver;   ///< inner least-squares settings
  double weak_signal_floor = -90.0;
  double antenna_height = 0.5;  ///< robot antenna above its floor
  /// Range weighting, wall-count hypotheses and NLOS compensation; with
  /// refine.compensate off this is plain iterated trilateration.
  RefineSettings refine;
  /// Floors to try; empty means every level of the map.
  std::vector<int> levels;
};

/// Online localizer over an AP-augmented map. Immutable after construction;
/// localize() may be called concurrently.
class RobotLocalizer {
 public:
  RobotLocalizer(const OsmAgMap& map, PropagationParams params, RobotLocalizeOptions opts = {});

  /// One fixed-z hypothesis per candidate floor; the lowest misfit wins.
  /// Throws InsufficientAnchorsError when fewer than 3 scan APs are known.
  LocalizationResult localize(const ScanMap& scan) const;

  const std::vector<WallSegment>& walls() const { return walls_; }

 private:
  LocalizationResult localize_on_floor(const std::vector<RangeObservation>& obs,
                                       const std::vector<std::string>& ids, int level) const;

  std::map<std::string, LocalPoint3> aps_;
  std::vector<WallSegment> walls_;
  std::vector<int> levels_;
  PropagationParams params_;
  RobotLocalizeOptions opts_;
  GeometryConfig geometry_;
};

LocalizationResult localize_robot(const ScanMap& scan, const OsmAgMap& map,
                                  const PropagationParams& params,
                                  const RobotLocalizeOptions& opts = {});

/// A held-out position with the scan observed there.
struct TestRecord {
  LocalPoint3 truth;
  int level = 0;
  ScanMap scan;
  std::string tag;
};

using Localizer = std::function<LocalizationResult(const ScanMap&)>;

struct EvaluationResult {
  ErrorStats stats;
  std::vector<double> errors;  ///< per test point, NaN for misses
  std::vector<LocalizationResult> results;
};

/// Runs `localize` on every record; failures count as misses.
EvaluationResult evaluate(std::span<const TestRecord> testpoints, const Localizer& localize,
                          unsigned jobs = 1);

ErrorStats evaluate_localization(std::span<const TestRecord> testpoints, const OsmAgMap& map,
                                 const PropagationParams& params,
                                 const RobotLocalizeOptions& opts = {});

}  // namespace wifiloc
