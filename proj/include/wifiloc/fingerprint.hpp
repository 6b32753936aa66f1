#pragma once

#include <string>
#include <vector>

#include "wifiloc/osmag.hpp"
#include "wifiloc/robot_localize.hpp"

namespace wifiloc {

struct FingerprintEntry {
  LocalPoint3 position;
  int level = 0;
  ScanMap rssi;
};

struct FingerprintIndex {
  std::vector<FingerprintEntry> entries;
  std::vector<std::string> ap_universe;  ///< sorted union of heard APs
};

struct KnnOptions {
  int k = 4;
  double missing_dbm = -100.0;  ///< imputed for an AP heard on one side only
};

/// Throws EmptyError("empty_index") when the map has no fingerprints.
FingerprintIndex build_index(const OsmAgMap& map);

/// Signal-space distance over the union of both AP sets.
double signal_distance(const ScanMap& a, const ScanMap& b, double missing_dbm = -100.0);

/// Unweighted centroid of the k nearest entries (ties broken by entry order);
/// level is the majority among them, ties going to the nearest entry.
LocalizationResult knn_localize(const FingerprintIndex& index, const ScanMap& scan,
                                const KnnOptions& opts = {});

}  // namespace wifiloc
