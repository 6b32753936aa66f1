#include "wifiloc/calibrate.hpp"

#include <algorithm>
#include <cmath>

#include "wifiloc/error.hpp"

namespace wifiloc {

std::vector<ClassifiedPair> classify_pairs(const CalibrationInput& input) {
  std::vector<ClassifiedPair> out;
  for (const auto& ap : input.aps) {
    for (const auto& fp : input.fingerprints) {
      auto it = fp.rssi.find(ap.ap_id);
      if (it == fp.rssi.end()) continue;
      ClassifiedPair pair;
      const CrossingReport crossing =
          count_crossings(ap.position, fp.position, input.walls, input.geometry);
      pair.measurement = {ap.ap_id, it->second, fp.position, crossing.count};
      pair.distance = euclidean(ap.position, fp.position);
      pair.wall_count = crossing.count;
      pair.los = crossing.is_los;
      out.push_back(std::move(pair));
    }
  }
  return out;
}

LosFit fit_los(std::span<const ClassifiedPair> los_pairs) {
  // rssi = rssi0 + n * x with x = -10 log10(d); centered normal equations.
  const double count = static_cast<double>(los_pairs.size());
  double mean_x = 0.0;
  double mean_y = 0.0;
  for (const auto& p : los_pairs) {
    mean_x += -10.0 * std::log10(p.distance);
    mean_y += p.measurement.rssi;
  }
  if (los_pairs.empty()) throw RankError("no LOS pairs to fit");
  mean_x /= count;
  mean_y /= count;
  double sxx = 0.0;
  double sxy = 0.0;
  for (const auto& p : los_pairs) {
    const double dx = -10.0 * std::log10(p.distance) - mean_x;
    sxx += dx * dx;
    sxy += dx * (p.measurement.rssi - mean_y);
  }
  if (!(sxx > 1e-12 * count)) throw RankError("LOS pairs span a single distance");
  const double n = sxy / sxx;
  return {mean_y - n * mean_x, n};
}

double fit_wall_loss(std::span<const ClassifiedPair> nlos_pairs, double rssi0, double n) {
  double num = 0.0;
  double den = 0.0;
  for (const auto& p : nlos_pairs) {
    const double excess = (rssi0 - 10.0 * n * std::log10(p.distance)) - p.measurement.rssi;
    num += p.wall_count * excess;
    den += static_cast<double>(p.wall_count) * p.wall_count;
  }
  if (den == 0.0) throw InsufficientPairsError("nlos", "wall-loss fit needs a pair with walls");
  // The 1-D quadratic's constrained minimizer over wall_loss >= 0.
  return std::max(0.0, num / den);
}

CalibrationReport calibrate_report(const CalibrationInput& input, const CalibrationOptions& opts) {
  if (input.aps.empty()) {
    throw InsufficientPairsError("surveyed_aps", "calibration needs at least one surveyed AP");
  }
  std::vector<ClassifiedPair> los;
  std::vector<ClassifiedPair> nlos;
  CalibrationReport report;
  for (auto& pair : classify_pairs(input)) {
    if (pair.distance < opts.min_distance) {
      ++report.excluded_near;
      continue;
    }
    (pair.los ? los : nlos).push_back(std::move(pair));
  }
  report.los_pairs = static_cast<int>(los.size());
  report.nlos_pairs = static_cast<int>(nlos.size());
  if (report.los_pairs < opts.min_los_pairs) {
    throw InsufficientPairsError("los", "only " + std::to_string(los.size()) + " LOS pairs (need " +
                                            std::to_string(opts.min_los_pairs) + ")");
  }
  if (report.nlos_pairs < opts.min_nlos_pairs) {
    throw InsufficientPairsError("nlos", "only " + std::to_string(nlos.size()) +
                                             " NLOS pairs (need " +
                                             std::to_string(opts.min_nlos_pairs) + ")");
  }

  const LosFit base = fit_los(los);
  PropagationParams params{base.rssi0, base.n, fit_wall_loss(nlos, base.rssi0, base.n), 0.0};

  auto sum_sq = [&params](const std::vector<ClassifiedPair>& pairs) {
    double s = 0.0;
    for (const auto& p : pairs) {
      const double e = p.measurement.rssi - predict_rssi(params, p.distance, p.wall_count);
      s += e * e;
    }
    return s;
  };
  const double los_ss = sum_sq(los);
  const double nlos_ss = sum_sq(nlos);
  report.los_rms = std::sqrt(los_ss / los.size());
  report.nlos_rms = std::sqrt(nlos_ss / nlos.size());
  params.sigma = std::sqrt((los_ss + nlos_ss) / static_cast<double>(los.size() + nlos.size()));
  report.params = params;
  return report;
}

PropagationParams calibrate(const CalibrationInput& input, const CalibrationOptions& opts) {
  return calibrate_report(input, opts).params;
}

}  // namespace wifiloc
