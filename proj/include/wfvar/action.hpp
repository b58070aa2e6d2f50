#pragma once

#include <span>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "wfvar/core.hpp"
#include "wfvar/lightcone.hpp"
#include "wfvar/quadrature.hpp"

namespace wfvar {

/// Integration window [t_start, t_end] of the varied trajectory.
using ActionWindow = TimeWindow;

/// Collision cutoff on light-cone distances.
inline constexpr double kCollisionRadius = 1e-9;

/// Mass of the varied particle and the coupling kappa = -q_self * q_partner
/// (kappa = 1 for opposite unit charges).
struct LagrangianParams {
  double mass = 1.0;
  double kappa = 1.0;
};

inline double coupling(const ParticleParams& self, const ParticleParams& partner) {
  return -self.charge * partner.charge;
}

/// Advanced and retarded data of the partner as seen from one event.
struct DelayedData {
  ConeSolution adv;
  ConeSolution ret;
};

/// Both light cones of the event (t, x) onto `partner`. `side` selects the
/// one-sided partner limits when a cone lands on a partner breaking point.
DelayedData delayed_data(const PiecewisePath& partner, const Event& event, Side side = Side::Right);

/// Integrand of the action at one instant of the varied particle.
double interaction_density(const Vec3& x1, const Vec3& v1, const ConeSolution& cone_adv,
                           const ConeSolution& cone_ret, const LagrangianParams& params);

struct LagrangianPartials {
  double value = 0.0;
  /// dL/dx1 including the implicit dependence of the cone times on x1.
  Vec3 d_dx;
  /// dL/dv1, the canonical momentum current.
  Vec3 d_dv;
};

LagrangianPartials lagrangian_partials(const Vec3& x1, const Vec3& v1, const DelayedData& delayed,
                                       const LagrangianParams& params);

/// Time on the varied trajectory whose light cone on `self_branch` passes
/// through a partner breaking point located at `partner_x`.
struct Pullback {
  double t = 0.0;
  Branch self_branch = Branch::Retarded;
  Vec3 partner_x;
};

std::vector<Pullback> pullbacks(const PiecewisePath& self, const PiecewisePath& partner,
                                const ActionWindow& window);

/// Quadrature cut points on `window`: the window ends, breaking points of
/// `self`, and times whose advanced or retarded cone hits a breaking point of
/// `partner`. `extra` junctions (of a perturbation) are merged in.
std::vector<double> smooth_breaks(const PiecewisePath& self, const PiecewisePath& partner,
                                  const ActionWindow& window, std::span<const double> extra = {});

/// Integral of the Lagrangian of `self` over `window`, without constants.
double action_integral(const PiecewiseTrajectory& self, const PiecewiseTrajectory& partner,
                       const ActionWindow& window, const QuadratureOptions& opts = {});

/// Action for variations of trajectory 1: K2 + integral over the window, with
/// the partner extended by the boundary history of particle 2.
double action(const PiecewiseTrajectory& traj1, const PiecewiseTrajectory& traj2,
              const ActionWindow& window, const BoundaryData& boundary,
              const QuadratureOptions& opts = {});

/// Action for variations of trajectory 2 on `boundary.window2` (indices
/// exchanged; particle 1 is extended by its history).
double action_second(const PiecewiseTrajectory& traj1, const PiecewiseTrajectory& traj2,
                     const BoundaryData& boundary, const QuadratureOptions& opts = {});

/// Directional derivative of the action of trajectory 1 along b, which must
/// vanish at both window ends.
double frechet_directional(const PiecewiseTrajectory& traj1, const PiecewiseTrajectory& traj2,
                           const ActionWindow& window, const BoundaryData& boundary,
                           const Perturbation& b, const QuadratureOptions& opts = {});

/// Directional derivatives of the action of `self` along every perturbation in
/// `basis`, evaluated in one quadrature pass. No boundary splicing is done.
/// Includes the jump terms from pullback points that move with the
/// perturbation.
Eigen::VectorXd frechet_gradient(const PiecewiseTrajectory& self, const PiecewiseTrajectory& partner,
                                 const ActionWindow& window, std::span<const Perturbation> basis,
                                 const QuadratureOptions& opts = {});

/// Euler-Lagrange residual d/dt(dL/dv) - dL/dx of `self` at t. The time
/// derivative is a fourth-order finite difference kept inside the smooth
/// interval selected by `side`.
Vec3 el_residual(const PiecewiseTrajectory& self, const PiecewiseTrajectory& partner, double t,
                 Side side = Side::Right);

/// Same, with precomputed smooth-interval cut points (from `smooth_breaks`
/// over the domain of `self`).
Vec3 el_residual(const PiecewiseTrajectory& self, const PiecewiseTrajectory& partner, double t,
                 Side side, std::span<const double> cuts);

}  // namespace wfvar
