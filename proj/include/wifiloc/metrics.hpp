#pragma once

#include <span>

namespace wifiloc {

/// The four error columns of a localization comparison table, plus counts.
struct ErrorStats {
  int count = 0;
  int misses = 0;
  double mean = 0.0;
  double std_dev = 0.0;  ///< population standard deviation
  double rmse = 0.0;
  double p95 = 0.0;  ///< linear interpolation between order statistics
};

ErrorStats summarize_errors(std::span<const double> errors, int misses = 0);

/// q-th percentile (q in [0, 100]) with linear interpolation; 0 when empty.
double percentile(std::span<const double> values, double q);

}  // namespace wifiloc
