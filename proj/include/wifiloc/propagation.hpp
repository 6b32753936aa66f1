#pragma once

#include <optional>
#include <string>

#include "wifiloc/osmag.hpp"
#include "wifiloc/point.hpp"

namespace wifiloc {

/// Log-distance path-loss model with a single averaged wall attenuation.
///
/// wall_loss is a positive magnitude in dB: each wall on the direct path
/// removes wall_loss dB from the received signal, and compensation adds it
/// back before inverting for distance.
struct PropagationParams {
  double rssi0 = -28.79;  ///< dBm at 1 m
  double n = 2.5;         ///< path-loss exponent
  double wall_loss = 10.77;
  double sigma = 0.0;  ///< shadowing std-dev, dB

  /// Throws DomainError when an invariant does not hold.
  void validate() const;
  friend bool operator==(const PropagationParams&, const PropagationParams&) = default;
};

struct Measurement {
  std::string ap_id;
  double rssi = 0.0;
  LocalPoint3 robot_pos;
  std::optional<int> wall_count;
};

/// Deterministic part of the model: rssi0 - 10 n log10(d) - walls * wall_loss.
double predict_rssi(const PropagationParams& params, double d, int walls);

double invert_distance_los(const PropagationParams& params, double rssi);

/// Distance after adding `walls * wall_loss` back to the reading.
double invert_distance_compensated(const PropagationParams& params, double rssi, int walls);

// Map tags: wifi:model:{rssi0,n,wall_loss,sigma} on a node tagged wifi:model=yes.
TagMap to_tags(const PropagationParams& params);
std::optional<PropagationParams> params_from_tags(const TagMap& tags);
void store_params(OsmAgMap& map, const PropagationParams& params);
std::optional<PropagationParams> load_params(const OsmAgMap& map);

}  // namespace wifiloc
