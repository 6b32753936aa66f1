#include "wifiloc/propagation.hpp"

#include <cmath>

#include "wifiloc/error.hpp"
#include "wifiloc/numfmt.hpp"

namespace wifiloc {

namespace {
constexpr const char* kModelTag = "wifi:model";
}

void PropagationParams::validate() const {
  if (!(n > 0.0)) throw DomainError("path-loss exponent must be positive");
  if (!(wall_loss >= 0.0)) throw DomainError("wall loss must be a non-negative magnitude");
  if (!(sigma >= 0.0)) throw DomainError("shadowing sigma must be non-negative");
  if (!(rssi0 >= -60.0 && rssi0 <= 0.0)) throw DomainError("rssi0 outside [-60, 0] dBm");
}

double predict_rssi(const PropagationParams& params, double d, int walls) {
  if (!(d > 0.0)) throw DomainError("distance must be positive");
  if (walls < 0) throw DomainError("wall count must be non-negative");
  return params.rssi0 - 10.0 * params.n * std::log10(d) - walls * params.wall_loss;
}

double invert_distance_los(const PropagationParams& params, double rssi) {
  return std::pow(10.0, (params.rssi0 - rssi) / (10.0 * params.n));
}

double invert_distance_compensated(const PropagationParams& params, double rssi, int walls) {
  if (walls < 0) throw DomainError("wall count must be non-negative");
  return invert_distance_los(params, rssi + walls * params.wall_loss);
}

TagMap to_tags(const PropagationParams& params) {
  return {{kModelTag, "yes"},
          {"wifi:model:rssi0", format_number(params.rssi0)},
          {"wifi:model:n", format_number(params.n)},
          {"wifi:model:wall_loss", format_number(params.wall_loss)},
          {"wifi:model:sigma", format_number(params.sigma)}};
}

std::optional<PropagationParams> params_from_tags(const TagMap& tags) {
  auto get = [&tags](const char* k) -> std::optional<double> {
    auto it = tags.find(k);
    if (it == tags.end()) return std::nullopt;
    return parse_double(it->second);
  };
  auto rssi0 = get("wifi:model:rssi0");
  auto n = get("wifi:model:n");
  auto wall = get("wifi:model:wall_loss");
  if (!rssi0 || !n || !wall) return std::nullopt;
  return PropagationParams{*rssi0, *n, *wall, get("wifi:model:sigma").value_or(0.0)};
}

void store_params(OsmAgMap& map, const PropagationParams& params) {
  for (auto& [id, node] : map.nodes) {
    if (node.tags.contains(kModelTag)) {
      for (const auto& [k, v] : to_tags(params)) node.tags[k] = v;
      return;
    }
  }
  OsmNode node;
  node.id = map.max_id() + 1;
  node.geo = map.origin;
  node.tags = to_tags(params);
  map.nodes.emplace(node.id, std::move(node));
}

std::optional<PropagationParams> load_params(const OsmAgMap& map) {
  for (const auto& [id, node] : map.nodes) {
    if (node.tags.contains(kModelTag)) return params_from_tags(node.tags);
  }
  return std::nullopt;
}

}  // namespace wifiloc
