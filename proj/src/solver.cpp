#include "wifiloc/solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Dense>

#include "wifiloc/error.hpp"

namespace wifiloc {

namespace {

constexpr double kSingularDist = 1e-6;

Eigen::Vector3d vec(const LocalPoint3& p) { return {p.x, p.y, p.z}; }
LocalPoint3 point(const Eigen::Vector3d& v) { return {v.x(), v.y(), v.z()}; }

double residual(const RangeConstraint& c, const Eigen::Vector3d& p, ResidualForm form) {
  const double dist = (p - vec(c.anchor)).norm();
  if (form == ResidualForm::kLogRatio) return std::log(std::max(dist, kSingularDist) / c.range);
  return dist - c.range;
}

double weighted_cost(std::span<const RangeConstraint> cs, const Eigen::Vector3d& p,
                     ResidualForm form) {
  double cost = 0.0;
  for (const auto& c : cs) {
    const double r = residual(c, p, form);
    cost += c.weight * r * r;
  }
  return cost;
}

// Second singular value of the centered anchor cloud, relative to the first.
// dims = 2 restricts the test to the horizontal plane.
bool anchors_collinear(std::span<const RangeConstraint> cs, int dims) {
  Eigen::MatrixXd m(cs.size(), dims);
  for (std::size_t i = 0; i < cs.size(); ++i) {
    m(i, 0) = cs[i].anchor.x;
    m(i, 1) = cs[i].anchor.y;
    if (dims == 3) m(i, 2) = cs[i].anchor.z;
  }
  m.rowwise() -= m.colwise().mean();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  const auto& s = svd.singularValues();
  return s(1) <= 1e-6 * std::max(1.0, s(0));
}

void check_count(std::span<const RangeConstraint> cs) {
  if (cs.size() < 3) {
    throw UnderdeterminedError("need at least 3 range constraints, got " +
                               std::to_string(cs.size()));
  }
}

}  // namespace

Eigen::VectorXd range_residuals(std::span<const RangeConstraint> constraints, const LocalPoint3& p,
                                ResidualForm form) {
  Eigen::VectorXd r(constraints.size());
  const Eigen::Vector3d x = vec(p);
  for (std::size_t i = 0; i < constraints.size(); ++i) r(i) = residual(constraints[i], x, form);
  return r;
}

Eigen::MatrixXd range_jacobian(std::span<const RangeConstraint> constraints, const LocalPoint3& p,
                               ResidualForm form) {
  Eigen::MatrixXd j(constraints.size(), 3);
  const Eigen::Vector3d x = vec(p);
  for (std::size_t i = 0; i < constraints.size(); ++i) {
    const Eigen::Vector3d diff = x - vec(constraints[i].anchor);
    const double norm = diff.norm();
    // The gradient of |p - a| is undefined at the anchor itself.
    j.row(i) = norm < kSingularDist ? Eigen::Vector3d::UnitX() : Eigen::Vector3d(diff / norm);
    if (form == ResidualForm::kLogRatio) j.row(i) /= std::max(norm, kSingularDist);
  }
  return j;
}

SolveOutcome solve_ranges(std::span<const RangeConstraint> constraints, const LocalPoint3& init,
                          const SolverConfig& cfg) {
  check_count(constraints);
  if (cfg.max_iters < 1) throw DomainError("max_iters must be at least 1");
  if (!(cfg.epsilon > 0.0)) throw DomainError("epsilon must be positive");

  const bool fixed = cfg.fixed_z.has_value();
  auto clamp = [&](Eigen::Vector3d& p) {
    if (cfg.xy_bounds) {
      const auto& [lo, hi] = *cfg.xy_bounds;
      p.x() = std::clamp(p.x(), lo.x, hi.x);
      p.y() = std::clamp(p.y(), lo.y, hi.y);
    }
    if (fixed) {
      p.z() = *cfg.fixed_z;
      return;
    }
    if (cfg.z_min) p.z() = std::max(p.z(), *cfg.z_min);
    if (cfg.z_max) p.z() = std::min(p.z(), *cfg.z_max);
  };

  Eigen::Vector3d p = vec(init);
  if (!p.allFinite()) p = Eigen::Vector3d::Zero();
  clamp(p);

  Eigen::VectorXd w(constraints.size());
  for (std::size_t i = 0; i < constraints.size(); ++i) w(i) = constraints[i].weight;

  double cost = weighted_cost(constraints, p, cfg.residual);
  double lambda = -1.0;
  SolveOutcome out;

  for (int iter = 1; iter <= cfg.max_iters; ++iter) {
    out.iterations = iter;
    const LocalPoint3 pp = point(p);
    Eigen::MatrixXd j = range_jacobian(constraints, pp, cfg.residual);
    if (fixed) j.col(2).setZero();
    const Eigen::VectorXd r = range_residuals(constraints, pp, cfg.residual);
    Eigen::Matrix3d jtj = j.transpose() * w.asDiagonal() * j;
    const Eigen::Vector3d g = j.transpose() * (w.asDiagonal() * r);
    if (lambda < 0.0) lambda = cfg.damping_init * std::max(jtj.diagonal().maxCoeff(), 1e-12);
    if (fixed) jtj(2, 2) = 1.0;

    Eigen::Matrix3d a = jtj;
    a.diagonal().array() += lambda;
    Eigen::Vector3d step = a.ldlt().solve(-g);
    if (fixed) step.z() = 0.0;
    if (!step.allFinite()) break;

    Eigen::Vector3d candidate = p + step;
    clamp(candidate);
    const double step_norm = (candidate - p).norm();
    const double cand_cost = weighted_cost(constraints, candidate, cfg.residual);
    if (cand_cost <= cost) {
      p = candidate;
      cost = cand_cost;
      lambda *= 0.3;
    } else {
      lambda *= 3.0;
    }
    if (step_norm < cfg.epsilon) {
      out.converged = true;
      break;
    }
  }

  out.position = point(p);
  double wsum = w.sum();
  out.residual_rms = wsum > 0.0 ? std::sqrt(cost / wsum) : 0.0;
  out.cost = cost;

  if (anchors_collinear(constraints, fixed ? 2 : 3)) {
    throw DegenerateGeometryError("range anchors are collinear", out.position);
  }
  return out;
}

LocalPoint3 linear_init(std::span<const RangeConstraint> constraints, std::optional<double> fixed_z) {
  check_count(constraints);
  const int dims = fixed_z ? 2 : 3;
  const std::size_t rows = constraints.size() - 1;
  const Eigen::Vector3d a0 = vec(constraints[0].anchor);
  const double d0 = constraints[0].range;

  // |p - a_i|^2 = d_i^2 minus the same for i = 0:
  //   2 (a_i - a_0) . p = |a_i|^2 - |a_0|^2 - d_i^2 + d_0^2
  Eigen::MatrixXd m(rows, dims);
  Eigen::VectorXd b(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const Eigen::Vector3d ai = vec(constraints[i + 1].anchor);
    const double di = constraints[i + 1].range;
    if (fixed_z) {
      const double z = *fixed_z;
      m(i, 0) = 2.0 * (ai.x() - a0.x());
      m(i, 1) = 2.0 * (ai.y() - a0.y());
      b(i) = ai.head<2>().squaredNorm() - a0.head<2>().squaredNorm() - di * di + d0 * d0 +
             (ai.z() - z) * (ai.z() - z) - (a0.z() - z) * (a0.z() - z);
    } else {
      m.row(i) = 2.0 * (ai - a0).transpose();
      b(i) = ai.squaredNorm() - a0.squaredNorm() - di * di + d0 * d0;
    }
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeFullV | Eigen::ComputeThinU);
  svd.setThreshold(1e-9);
  const int rank = static_cast<int>(svd.rank());
  if (rank < 2) {
    throw DegenerateGeometryError("linearized multilateration system is rank-deficient",
                                  point(a0));
  }
  const Eigen::VectorXd sol = svd.solve(b);

  if (fixed_z) return {sol(0), sol(1), *fixed_z};
  Eigen::Vector3d p = sol;
  if (rank == 3) return point(p);

  // Coplanar anchors: the minimum-norm solution fixes the in-plane position;
  // move it onto the anchor plane and recover the height above it.
  Eigen::Vector3d normal = svd.matrixV().col(2).normalized();
  if (normal.z() < 0.0 || (normal.z() == 0.0 && normal.x() + normal.y() < 0.0)) normal = -normal;
  p += normal * normal.dot(a0 - p);
  double excess = 0.0;
  for (const auto& c : constraints) {
    excess += c.range * c.range - (p - vec(c.anchor)).squaredNorm();
  }
  excess /= static_cast<double>(constraints.size());
  p += normal * std::sqrt(std::max(0.0, excess));
  return point(p);
}

}  // namespace wifiloc
