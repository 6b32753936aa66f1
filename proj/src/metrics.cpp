#include "wifiloc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace wifiloc {

double percentile(std::span<const double> values, double q) {
  if (values.empty()) return 0.0;
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double rank = std::clamp(q, 0.0, 100.0) / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (rank - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

ErrorStats summarize_errors(std::span<const double> errors, int misses) {
  ErrorStats s;
  s.misses = misses;
  s.count = static_cast<int>(errors.size());
  if (errors.empty()) return s;
  double sum = 0.0;
  double sum_sq = 0.0;
  for (double e : errors) {
    sum += e;
    sum_sq += e * e;
  }
  const double n = static_cast<double>(errors.size());
  s.mean = sum / n;
  double var = 0.0;
  for (double e : errors) var += (e - s.mean) * (e - s.mean);
  s.std_dev = std::sqrt(var / n);
  s.rmse = std::sqrt(sum_sq / n);
  s.p95 = percentile(errors, 95.0);
  return s;
}

}  // namespace wifiloc
