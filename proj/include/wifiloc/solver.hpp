#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "wifiloc/point.hpp"

namespace wifiloc {

/// One term of sum_i w_i (|p - anchor_i| - range_i)^2.
struct RangeConstraint {
  LocalPoint3 anchor;
  double range = 0.0;
  double weight = 1.0;
};

/// kLinear: r_i = |p - a_i| - d_i. kLogRatio: r_i = ln(|p - a_i| / d_i), which
/// is the dB residual of the log-distance model up to a constant factor.
enum class ResidualForm { kLinear, kLogRatio };

struct SolverConfig {
  int max_iters = 100;
  double epsilon = 1e-4;       ///< step-norm termination, meters
  double damping_init = 1e-3;  ///< scaled by the largest diagonal of J^T W J
  ResidualForm residual = ResidualForm::kLinear;
  /// Solve with z pinned to this value; free 3D otherwise.
  std::optional<double> fixed_z;
  /// Optional clamp on z when free.
  std::optional<double> z_min;
  std::optional<double> z_max;
  /// Optional clamp on x and y: {x_min, y_min} to {x_max, y_max}.
  std::optional<std::pair<LocalPoint3, LocalPoint3>> xy_bounds;
};

struct SolveOutcome {
  LocalPoint3 position;
  double residual_rms = 0.0;  ///< sqrt(cost / sum of weights), meters
  double cost = 0.0;          ///< sum of w * residual^2 at the solution
  int iterations = 0;
  bool converged = false;
};

/// Levenberg-damped Gauss-Newton on the range objective starting at `init`.
/// Throws UnderdeterminedError for fewer than 3 constraints and
/// DegenerateGeometryError (with the best-effort estimate) when the anchors
/// are collinear in the solved dimensions.
SolveOutcome solve_ranges(std::span<const RangeConstraint> constraints, const LocalPoint3& init,
                          const SolverConfig& cfg = {});

/// Closed-form multilateration: subtract the first squared-range equation
/// from the others and solve the linear system in least squares. With
/// `fixed_z` only x and y are solved. When the anchors are coplanar the
/// out-of-plane offset is taken from the mean squared-range excess, on the
/// +z side of the plane. Throws DegenerateGeometryError when rank-deficient.
LocalPoint3 linear_init(std::span<const RangeConstraint> constraints,
                        std::optional<double> fixed_z = std::nullopt);

/// Residuals |p - anchor_i| - range_i, or their log-ratio form.
Eigen::VectorXd range_residuals(std::span<const RangeConstraint> constraints, const LocalPoint3& p,
                                ResidualForm form = ResidualForm::kLinear);

/// Analytic Jacobian (n x 3) of range_residuals with respect to p.
Eigen::MatrixXd range_jacobian(std::span<const RangeConstraint> constraints, const LocalPoint3& p,
                               ResidualForm form = ResidualForm::kLinear);

}  // namespace wifiloc
