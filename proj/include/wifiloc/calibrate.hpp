#pragma once

#include <span>
#include <vector>

#include "wifiloc/geometry.hpp"
#include "wifiloc/osmag.hpp"
#include "wifiloc/propagation.hpp"

namespace wifiloc {

struct CalibrationInput {
  std::vector<ApRecord> aps;  ///< surveyed APs
  std::vector<Fingerprint> fingerprints;
  std::vector<WallSegment> walls;
  GeometryConfig geometry;
};

struct ClassifiedPair {
  Measurement measurement;
  double distance = 0.0;
  int wall_count = 0;
  bool los = true;
};

struct LosFit {
  double rssi0 = 0.0;
  double n = 0.0;
};

struct CalibrationReport {
  PropagationParams params;
  int los_pairs = 0;
  int nlos_pairs = 0;
  int excluded_near = 0;  ///< pairs closer than 1 m, not fitted
  double los_rms = 0.0;
  double nlos_rms = 0.0;
};

struct CalibrationOptions {
  int min_los_pairs = 10;
  int min_nlos_pairs = 10;
  double min_distance = 1.0;
};

/// One pair per (AP, fingerprint) where the fingerprint heard the AP.
std::vector<ClassifiedPair> classify_pairs(const CalibrationInput& input);

/// Closed-form OLS of rssi on -10 log10(d). Throws RankError when every
/// distance is the same.
LosFit fit_los(std::span<const ClassifiedPair> los_pairs);

/// sum(N * excess) / sum(N^2) where excess = (rssi0 - 10 n log10 d) - rssi.
double fit_wall_loss(std::span<const ClassifiedPair> nlos_pairs, double rssi0, double n);

/// classify -> fit_los -> fit_wall_loss; sigma is the RMS residual of both stages.
CalibrationReport calibrate_report(const CalibrationInput& input, const CalibrationOptions& opts = {});
PropagationParams calibrate(const CalibrationInput& input, const CalibrationOptions& opts = {});

}  // namespace wifiloc
