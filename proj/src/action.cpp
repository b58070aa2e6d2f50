#include "wfvar/action.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "wfvar/error.hpp"

namespace wfvar {

namespace {

void check_collision(const ConeSolution& c) {
  if (c.r < kCollisionRadius) {
    std::ostringstream os;
    os << "collision singularity: light-cone distance " << c.r << " at partner time " << c.t_k;
    throw CollisionError(os.str());
  }
}

double lorentz_gamma(const Vec3& v) {
  const double v2 = norm2(v);
  if (v2 >= 1.0) throw SuperluminalError("particle speed reaches the speed of light");
  return 1.0 / std::sqrt(1.0 - v2);
}

// One branch of the interaction term T = (1 - v1.v2) / (2 rho) and its x1
// gradient. rho = r (1 -+ n.v2) is the retarded/advanced Lienard-Wiechert
// denominator; sign = +1 retarded, -1 advanced.
struct BranchTerm {
  double value;
  Vec3 grad;
  Vec3 current;  // v2 / (2 rho)
  double scalar_current;  // 1 / (2 rho)
};

BranchTerm branch_term(const Vec3& x1, const Vec3& v1, const ConeSolution& c, double sign) {
  check_collision(c);
  const Vec3 d = x1 - c.x;
  const Vec3& v2 = c.v;
  const Vec3& a2 = c.a;
  const double rho = c.r - sign * dot(d, v2);
  // Implicit dependence of the cone time on x1.
  const Vec3 dt2 = (-sign / rho) * d;
  const Vec3 drho = -sign * v2 + (-sign * (1.0 - norm2(v2)) - sign * dot(d, a2)) * dt2;
  const double num = 1.0 - dot(v1, v2);
  const Vec3 dnum = -dot(v1, a2) * dt2;
  BranchTerm out;
  out.value = num / (2.0 * rho);
  out.grad = dnum / (2.0 * rho) - (num / (2.0 * rho * rho)) * drho;
  out.current = v2 / (2.0 * rho);
  out.scalar_current = 1.0 / (2.0 * rho);
  return out;
}

LagrangianParams params_for(const PiecewiseTrajectory& self, const PiecewiseTrajectory& partner) {
  return {self.particle().mass, coupling(self.particle(), partner.particle())};
}

PiecewiseTrajectory partner_with_history(const PiecewiseTrajectory& partner,
                                         const std::optional<PiecewiseTrajectory>& history) {
  if (!history) return partner;
  return splice(partner, *history);
}

}  // namespace

DelayedData delayed_data(const PiecewisePath& partner, const Event& event, Side side) {
  ConeOptions opts;
  opts.side = side;
  return {cone_time(partner, event, Branch::Advanced, opts), cone_time(partner, event, Branch::Retarded, opts)};
}

double interaction_density(const Vec3& x1, const Vec3& v1, const ConeSolution& cone_adv,
                           const ConeSolution& cone_ret, const LagrangianParams& params) {
  (void)x1;
  check_collision(cone_adv);
  check_collision(cone_ret);
  const double v2 = norm2(v1);
  if (v2 >= 1.0) throw SuperluminalError("particle speed reaches the speed of light");
  const double adv = (1.0 - dot(v1, cone_adv.v)) / (2.0 * cone_adv.r * (1.0 + dot(cone_adv.n_hat, cone_adv.v)));
  const double ret = (1.0 - dot(v1, cone_ret.v)) / (2.0 * cone_ret.r * (1.0 - dot(cone_ret.n_hat, cone_ret.v)));
  return -params.mass * std::sqrt(1.0 - v2) + params.kappa * (adv + ret);
}

LagrangianPartials lagrangian_partials(const Vec3& x1, const Vec3& v1, const DelayedData& delayed,
                                       const LagrangianParams& params) {
  const double g = lorentz_gamma(v1);
  const BranchTerm adv = branch_term(x1, v1, delayed.adv, -1.0);
  const BranchTerm ret = branch_term(x1, v1, delayed.ret, 1.0);
  LagrangianPartials out;
  out.value = -params.mass / g + params.kappa * (adv.value + ret.value);
  out.d_dx = params.kappa * (adv.grad + ret.grad);
  out.d_dv = params.mass * g * v1 - params.kappa * (adv.current + ret.current);
  return out;
}

std::vector<Pullback> pullbacks(const PiecewisePath& self, const PiecewisePath& partner,
                                const ActionWindow& window) {
  std::vector<Pullback> out;
  for (double l : partner.junctions()) {
    const Event e{l, partner.position(l)};
    // The retarded cone of the partner event lands where the self advanced
    // cone hits it, and vice versa.
    for (Branch b : {Branch::Retarded, Branch::Advanced}) {
      try {
        const double t = cone_time(self, e, b).t_k;
        if (t >= window.start && t <= window.end) {
          out.push_back({t, b == Branch::Retarded ? Branch::Advanced : Branch::Retarded, e.x});
        }
      } catch (const InsufficientHistoryError&) {
      } catch (const DomainError&) {
      }
    }
  }
  std::sort(out.begin(), out.end(), [](const Pullback& a, const Pullback& b) { return a.t < b.t; });
  return out;
}

std::vector<double> smooth_breaks(const PiecewisePath& self, const PiecewisePath& partner,
                                  const ActionWindow& window, std::span<const double> extra) {
  std::vector<double> cuts{window.start, window.end};
  auto add = [&](double t) {
    if (t > window.start && t < window.end) cuts.push_back(t);
  };
  for (double t : self.junctions()) add(t);
  for (double t : extra) add(t);
  for (const Pullback& p : pullbacks(self, partner, window)) add(p.t);
  std::sort(cuts.begin(), cuts.end());
  // Drop near-duplicates so no panel degenerates.
  std::vector<double> out;
  for (double t : cuts) {
    if (out.empty() || t - out.back() > 1e-13 * std::max(1.0, std::abs(t))) out.push_back(t);
  }
  if (out.back() != window.end) out.back() = window.end;
  return out;
}

double action_integral(const PiecewiseTrajectory& self, const PiecewiseTrajectory& partner,
                       const ActionWindow& window, const QuadratureOptions& opts) {
  if (window.end < window.start) throw DomainError("action window has negative length");
  if (window.end == window.start) return 0.0;
  const LagrangianParams p = params_for(self, partner);
  const auto cuts = smooth_breaks(self.path(), partner.path(), window);
  auto density = [&](double t) {
    const State s = self.path().state(t);
    const DelayedData d = delayed_data(partner.path(), {t, s.x});
    return interaction_density(s.x, s.v, d.adv, d.ret, p);
  };
  return integrate_piecewise(density, cuts, opts);
}

double action(const PiecewiseTrajectory& traj1, const PiecewiseTrajectory& traj2,
              const ActionWindow& window, const BoundaryData& boundary,
              const QuadratureOptions& opts) {
  const PiecewiseTrajectory partner = partner_with_history(traj2, boundary.history2);
  return boundary.k2 + action_integral(traj1, partner, window, opts);
}

double action_second(const PiecewiseTrajectory& traj1, const PiecewiseTrajectory& traj2,
                     const BoundaryData& boundary, const QuadratureOptions& opts) {
  const PiecewiseTrajectory partner = partner_with_history(traj1, boundary.history1);
  return boundary.k1 + action_integral(traj2, partner, boundary.window2, opts);
}

Eigen::VectorXd frechet_gradient(const PiecewiseTrajectory& self, const PiecewiseTrajectory& partner,
                                 const ActionWindow& window, std::span<const Perturbation> basis,
                                 const QuadratureOptions& opts) {
  const auto n = static_cast<Eigen::Index>(basis.size());
  if (n == 0 || window.end <= window.start) return Eigen::VectorXd::Zero(n);
  const LagrangianParams p = params_for(self, partner);
  std::vector<double> extra;
  for (const auto& b : basis) {
    for (double t : b.junctions()) extra.push_back(t);
    extra.push_back(b.t_start());
    extra.push_back(b.t_end());
  }
  std::sort(extra.begin(), extra.end());
  extra.erase(std::unique(extra.begin(), extra.end()), extra.end());
  const auto cuts = smooth_breaks(self.path(), partner.path(), window, extra);
  auto integrand = [&](double t) {
    const State s = self.path().state(t);
    const DelayedData d = delayed_data(partner.path(), {t, s.x});
    const LagrangianPartials lp = lagrangian_partials(s.x, s.v, d, p);
    Eigen::VectorXd out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& b = basis[static_cast<std::size_t>(i)];
      if (t <= b.t_start() || t >= b.t_end()) {
        out[i] = 0.0;
        continue;
      }
      const auto& seg = b.segments()[b.segment_index(t)];
      out[i] = dot(lp.d_dx, seg.position(t)) + dot(lp.d_dv, seg.velocity(t));
    }
    return out;
  };
  Eigen::VectorXd g = integrate_vector_piecewise(integrand, cuts, opts);
  if (g.size() != n) g = Eigen::VectorXd::Zero(n);

  // Pullback points move with the perturbation and the integrand jumps there.
  for (const Pullback& pb : pullbacks(self.path(), partner.path(), window)) {
    double jump = 0.0;
    bool have_jump = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto& b = basis[static_cast<std::size_t>(i)];
      if (pb.t <= b.t_start() || pb.t >= b.t_end()) continue;
      if (!have_jump) {
        double lr[2];
        for (Side side : {Side::Left, Side::Right}) {
          const State s = self.path().state(pb.t, side);
          const DelayedData d = delayed_data(partner.path(), {pb.t, s.x}, side);
          lr[side == Side::Right] = lagrangian_partials(s.x, s.v, d, p).value;
        }
        jump = lr[1] - lr[0];
        have_jump = true;
      }
      if (jump == 0.0) break;
      const State s = self.path().state(pb.t);
      const Vec3 nh = normalized(s.x - pb.partner_x);
      const Vec3 bt = b.position(pb.t);
      const double dt = pb.self_branch == Branch::Advanced ? -dot(nh, bt) / (1.0 + dot(nh, s.v))
                                                           : dot(nh, bt) / (1.0 - dot(nh, s.v));
      g[i] -= jump * dt;
    }
  }
  return g;
}

double frechet_directional(const PiecewiseTrajectory& traj1, const PiecewiseTrajectory& traj2,
                           const ActionWindow& window, const BoundaryData& boundary,
                           const Perturbation& b, const QuadratureOptions& opts) {
  const double slack = 1e-12 * std::max(1.0, std::max(std::abs(window.start), std::abs(window.end)));
  if (b.t_start() < window.start - slack || b.t_end() > window.end + slack) {
    throw ContractError("perturbation extends beyond the action window");
  }
  // Outside its own domain b is zero, so it must vanish at its domain ends.
  if (norm(b.position(b.t_start())) > 1e-12 || norm(b.position(b.t_end())) > 1e-12) {
    throw ContractError("perturbation must vanish at both window endpoints");
  }
  const PiecewiseTrajectory partner = partner_with_history(traj2, boundary.history2);
  const Perturbation basis[] = {b};
  return frechet_gradient(traj1, partner, window, basis, opts)[0];
}

namespace {

Vec3 momentum_at(const PiecewiseTrajectory& self, const PiecewiseTrajectory& partner, double t,
                 Side side, const LagrangianParams& p) {
  const State s = self.path().state(t, side);
  const DelayedData d = delayed_data(partner.path(), {t, s.x}, side);
  return lagrangian_partials(s.x, s.v, d, p).d_dv;
}

}  // namespace

Vec3 el_residual(const PiecewiseTrajectory& self, const PiecewiseTrajectory& partner, double t,
                 Side side) {
  const auto cuts =
      smooth_breaks(self.path(), partner.path(), {self.t_start(), self.t_end()});
  return el_residual(self, partner, t, side, cuts);
}

Vec3 el_residual(const PiecewiseTrajectory& self, const PiecewiseTrajectory& partner, double t,
                 Side side, std::span<const double> cuts) {
  if (!self.contains(t)) throw DomainError("el_residual time outside trajectory domain");
  const LagrangianParams p = params_for(self, partner);
  // Smooth interval [lo, hi] holding t on the requested side.
  auto interval = [&](Side sd) {
    double lo = self.t_start();
    double hi = self.t_end();
    for (double c : cuts) {
      if (c < t || (c == t && sd == Side::Right)) lo = std::max(lo, c);
      if (c > t || (c == t && sd == Side::Left)) hi = std::min(hi, c);
    }
    return std::pair{lo, hi};
  };
  auto [lo, hi] = interval(side);
  // At the ends of the domain only one side exists.
  if (!(hi > lo)) {
    side = side == Side::Right ? Side::Left : Side::Right;
    std::tie(lo, hi) = interval(side);
  }
  if (!(hi > lo)) throw DomainError("el_residual: empty smooth interval");
  const double h = 1e-4 * (hi - lo);
  auto mom = [&](double s, Side sd) { return momentum_at(self, partner, s, sd, p); };
  Vec3 dp;
  if (t - 2.0 * h >= lo && t + 2.0 * h <= hi) {
    dp = (mom(t - 2.0 * h, side) - 8.0 * mom(t - h, side) + 8.0 * mom(t + h, side) -
          mom(t + 2.0 * h, side)) /
         (12.0 * h);
  } else if (t + 4.0 * h <= hi) {
    dp = (-25.0 * mom(t, Side::Right) + 48.0 * mom(t + h, Side::Right) -
          36.0 * mom(t + 2.0 * h, Side::Right) + 16.0 * mom(t + 3.0 * h, Side::Right) -
          3.0 * mom(t + 4.0 * h, Side::Right)) /
         (12.0 * h);
  } else {
    dp = (25.0 * mom(t, Side::Left) - 48.0 * mom(t - h, Side::Left) +
          36.0 * mom(t - 2.0 * h, Side::Left) - 16.0 * mom(t - 3.0 * h, Side::Left) +
          3.0 * mom(t - 4.0 * h, Side::Left)) /
         (12.0 * h);
  }
  const State s = self.path().state(t, side);
  const DelayedData d = delayed_data(partner.path(), {t, s.x}, side);
  return dp - lagrangian_partials(s.x, s.v, d, p).d_dx;
}

}  // namespace wfvar
