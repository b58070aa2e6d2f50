#pragma once

#include <vector>

#include "wfvar/core.hpp"

namespace wfvar {

/// Jump of the momentum and energy currents of one particle at a breaking
/// point. Zero at every junction of a minimizer.
struct BreakResidual {
  double t = 0.0;
  Vec3 dp;
  double de = 0.0;
  /// 1 or 2; filled by callers that report both particles.
  int particle = 1;
};

/// dL/dv1 = m g v1 - kappa [v2-/(2 r-(1 - n-.v2-)) + v2+/(2 r+(1 + n+.v2+))].
Vec3 momentum_current(const PiecewiseTrajectory& traj1, const PiecewiseTrajectory& traj2, double t,
                      Side side = Side::Right);

/// Time component m g - kappa [1/(2 r-(1 - n-.v2-)) + 1/(2 r+(1 + n+.v2+))].
double energy_current(const PiecewiseTrajectory& traj1, const PiecewiseTrajectory& traj2, double t,
                      Side side = Side::Right);

/// Right-minus-left current jumps at every junction of traj1.
std::vector<BreakResidual> break_residuals(const PiecewiseTrajectory& traj1,
                                           const PiecewiseTrajectory& traj2);

struct JumpOptions {
  int max_iter = 100;
  /// Residual above which no admissible jump exists.
  double infeasible_tol = 1e-6;
};

/// Velocity right after the breaking point t_break that keeps both currents
/// continuous, given the velocity v_pre right before it. The four conditions
/// in three unknowns are solved in the least-squares sense.
Vec3 post_jump_velocity(const PiecewiseTrajectory& traj1, const PiecewiseTrajectory& traj2,
                        double t_break, const Vec3& v_pre, const JumpOptions& opts = {});

}  // namespace wfvar
