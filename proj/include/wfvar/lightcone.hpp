#pragma once

#include <utility>

#include "wfvar/core.hpp"

namespace wfvar {

enum class Branch { Retarded, Advanced };

/// A space-time point.
struct Event {
  double t = 0.0;
  Vec3 x;
};

/// Light-cone intersection of an event with a trajectory.
struct ConeSolution {
  /// Delayed (retarded) or advanced time on the trajectory.
  double t_k = 0.0;
  /// Light-cone distance |x_event - x(t_k)|.
  double r = 0.0;
  /// Unit vector from the trajectory point to the event.
  Vec3 n_hat;
  Vec3 x;
  Vec3 v;
  Vec3 a;
  /// dt_k/dt at fixed event position: 1/(1 - n.v) retarded, 1/(1 + n.v) advanced.
  double dilation = 1.0;
  /// Side used when t_k sits on a breaking point.
  Side side = Side::Right;
};

enum class RootMethod { Newton, Bisection };

struct ConeOptions {
  /// Absolute residual tolerance, scaled by max(1, |t|).
  double tol = 1e-12;
  int max_iter = 300;
  RootMethod method = RootMethod::Newton;
  /// One-sided limit requested when the root lands on a breaking point.
  Side side = Side::Right;
  /// Roots closer than this (relative) to a junction count as landing on it.
  double snap = 1e-11;
};

/// Solves t_k = t -+ |x - traj(t_k)| for the given branch.
ConeSolution cone_time(const PiecewiseTrajectory& traj, const Event& event, Branch branch,
                       const ConeOptions& opts = {});
ConeSolution cone_time(const PiecewisePath& path, const Event& event, Branch branch,
                       const ConeOptions& opts = {});

/// Far-field cone time on a sphere of radius R in direction n.
struct FarCone {
  double t_k = 0.0;
  State state;
  /// dt_k/dt: 1/(1 - n.v) retarded, 1/(1 + n.v) advanced.
  double dilation = 1.0;
  Side side = Side::Right;
};

/// Solves t_k = t - R + n.x(t_k) (retarded) or t_k = t + R - n.x(t_k)
/// (advanced).
FarCone far_cone(const PiecewisePath& path, double t, const Vec3& n, double R,
                 Branch branch = Branch::Retarded, const ConeOptions& opts = {});

double far_cone_time(const PiecewiseTrajectory& traj, double t, const Vec3& n, double R,
                     Branch branch = Branch::Retarded, const ConeOptions& opts = {});

/// Times on traj1 causally linked to the event (t2, x2(t2)): from its retarded
/// to its advanced cone time.
std::pair<double, double> influence_interval(const PiecewiseTrajectory& traj1,
                                             const PiecewiseTrajectory& traj2, double t2,
                                             const ConeOptions& opts = {});

}  // namespace wfvar
