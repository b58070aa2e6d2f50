#include "wfvar/momentum.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

#include "wfvar/action.hpp"
#include "wfvar/error.hpp"

namespace wfvar {

namespace {

// Partner contributions to the currents: P = sum v2/(2 rho), E = sum 1/(2 rho).
struct PartnerCurrents {
  Vec3 p;
  double e = 0.0;
};

PartnerCurrents partner_currents(const PiecewiseTrajectory& traj1, const PiecewiseTrajectory& traj2,
                                 double t, Side side) {
  const Vec3 x1 = traj1.path().state(t, side).x;
  const DelayedData d = delayed_data(traj2.path(), {t, x1}, side);
  PartnerCurrents out;
  for (const auto* c : {&d.adv, &d.ret}) {
    if (c->r < kCollisionRadius) throw CollisionError("collision singularity on a light cone");
  }
  const double rho_adv = d.adv.r * (1.0 + dot(d.adv.n_hat, d.adv.v));
  const double rho_ret = d.ret.r * (1.0 - dot(d.ret.n_hat, d.ret.v));
  out.p = d.adv.v / (2.0 * rho_adv) + d.ret.v / (2.0 * rho_ret);
  out.e = 1.0 / (2.0 * rho_adv) + 1.0 / (2.0 * rho_ret);
  return out;
}

double gamma_of(const Vec3& v) {
  const double v2 = norm2(v);
  if (v2 >= 1.0) throw SuperluminalError("speed reaches the speed of light");
  return 1.0 / std::sqrt(1.0 - v2);
}

}  // namespace

Vec3 momentum_current(const PiecewiseTrajectory& traj1, const PiecewiseTrajectory& traj2, double t,
                      Side side) {
  const Vec3 v1 = traj1.path().state(t, side).v;
  const double kappa = coupling(traj1.particle(), traj2.particle());
  const PartnerCurrents pc = partner_currents(traj1, traj2, t, side);
  return traj1.particle().mass * gamma_of(v1) * v1 - kappa * pc.p;
}

double energy_current(const PiecewiseTrajectory& traj1, const PiecewiseTrajectory& traj2, double t,
                      Side side) {
  const Vec3 v1 = traj1.path().state(t, side).v;
  const double kappa = coupling(traj1.particle(), traj2.particle());
  const PartnerCurrents pc = partner_currents(traj1, traj2, t, side);
  return traj1.particle().mass * gamma_of(v1) - kappa * pc.e;
}

std::vector<BreakResidual> break_residuals(const PiecewiseTrajectory& traj1,
                                           const PiecewiseTrajectory& traj2) {
  std::vector<BreakResidual> out;
  for (double l : traj1.junctions()) {
    BreakResidual r;
    r.t = l;
    r.dp = momentum_current(traj1, traj2, l, Side::Right) - momentum_current(traj1, traj2, l, Side::Left);
    r.de = energy_current(traj1, traj2, l, Side::Right) - energy_current(traj1, traj2, l, Side::Left);
    out.push_back(r);
  }
  return out;
}

Vec3 post_jump_velocity(const PiecewiseTrajectory& traj1, const PiecewiseTrajectory& traj2,
                        double t_break, const Vec3& v_pre, const JumpOptions& opts) {
  const double m = traj1.particle().mass;
  const double kappa = coupling(traj1.particle(), traj2.particle());
  const double g_pre = gamma_of(v_pre);
  const PartnerCurrents left = partner_currents(traj1, traj2, t_break, Side::Left);
  const PartnerCurrents right = partner_currents(traj1, traj2, t_break, Side::Right);

  // Targets for m g' v' and m g' after the jump.
  const Vec3 p_target = m * g_pre * v_pre + kappa * (right.p - left.p);
  const double e_target = m * g_pre + kappa * (right.e - left.e);

  // Unknown u = g' v' keeps every iterate subluminal.
  Eigen::Vector3d u(g_pre * v_pre.x, g_pre * v_pre.y, g_pre * v_pre.z);
  const Eigen::Vector3d p(p_target.x, p_target.y, p_target.z);
  auto residual = [&](const Eigen::Vector3d& w) {
    Eigen::Vector4d r;
    r.head<3>() = m * w - p;
    r[3] = m * std::sqrt(1.0 + w.squaredNorm()) - e_target;
    return r;
  };
  Eigen::Vector4d r = residual(u);
  double lambda = 1e-3;
  for (int it = 0; it < opts.max_iter && r.norm() > 1e-15 * std::max(1.0, std::abs(e_target)); ++it) {
    Eigen::Matrix<double, 4, 3> J;
    J.topRows<3>() = m * Eigen::Matrix3d::Identity();
    J.row(3) = (m / std::sqrt(1.0 + u.squaredNorm())) * u.transpose();
    const Eigen::Matrix3d A = J.transpose() * J;
    const Eigen::Vector3d g = J.transpose() * r;
    bool accepted = false;
    for (int k = 0; k < 30; ++k) {
      const Eigen::Vector3d step = (A + lambda * Eigen::Matrix3d(A.diagonal().asDiagonal())).ldlt().solve(-g);
      const Eigen::Vector4d r_new = residual(u + step);
      if (r_new.norm() < r.norm()) {
        u += step;
        r = r_new;
        lambda = std::max(lambda * 0.3, 1e-12);
        accepted = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) break;
  }
  if (r.norm() > opts.infeasible_tol) {
    std::ostringstream os;
    os << "no velocity jump at t=" << t_break << " restores current continuity (residual " << r.norm() << ")";
    throw InfeasibleJumpError(os.str());
  }
  const double g_post = std::sqrt(1.0 + u.squaredNorm());
  const Vec3 v_post{u[0] / g_post, u[1] / g_post, u[2] / g_post};
  if (norm(v_post) >= 1.0) throw SuperluminalError("post-jump velocity reaches the speed of light");
  return v_post;
}

}  // namespace wfvar
