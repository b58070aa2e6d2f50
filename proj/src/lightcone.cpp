#include "wfvar/lightcone.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "wfvar/error.hpp"

namespace wfvar {

namespace {

struct Eval {
  double f;
  double df;
};

// Root of a strictly increasing function on [lo_dom, hi_dom]. The bracket is
// grown geometrically from `guess`, then refined by Newton steps that fall
// back to bisection whenever they leave the bracket.
template <typename F>
double solve_increasing(F&& fn, double lo_dom, double hi_dom, double guess, double tol,
                        const ConeOptions& opts, const char* what) {
  const double slack = 1e-10 * std::max(1.0, std::max(std::abs(lo_dom), std::abs(hi_dom)));
  lo_dom -= slack;
  hi_dom += slack;
  guess = std::clamp(guess, lo_dom, hi_dom);

  // One more Newton step on an accepted root.
  auto polish = [&](double x, const Eval& ex) {
    if (opts.method != RootMethod::Newton || !(ex.df > 0.0) || ex.f == 0.0) return x;
    const double y = x - ex.f / ex.df;
    return std::abs(fn(y).f) <= std::abs(ex.f) ? y : x;
  };

  Eval e = fn(guess);
  if (std::abs(e.f) <= 0.25 * tol) return polish(guess, e);

  double lo, hi;
  Eval elo, ehi;
  double step = std::max(std::abs(e.f), 1e-6 * std::max(1.0, std::abs(guess)));
  if (e.f < 0.0) {
    lo = guess;
    elo = e;
    hi = guess;
    for (;;) {
      hi = std::min(hi + step, hi_dom);
      ehi = fn(hi);
      if (ehi.f >= 0.0) break;
      if (hi >= hi_dom) {
        if (ehi.f >= -tol) return hi;
        std::ostringstream os;
        os << what << " cone time lies after the trajectory end " << hi_dom - slack;
        throw InsufficientHistoryError(os.str());
      }
      lo = hi;
      elo = ehi;
      step *= 2.0;
    }
  } else {
    hi = guess;
    ehi = e;
    lo = guess;
    for (;;) {
      lo = std::max(lo - step, lo_dom);
      elo = fn(lo);
      if (elo.f <= 0.0) break;
      if (lo <= lo_dom) {
        if (elo.f <= tol) return lo;
        std::ostringstream os;
        os << what << " cone time lies before the trajectory start " << lo_dom + slack;
        throw InsufficientHistoryError(os.str());
      }
      hi = lo;
      ehi = elo;
      step *= 2.0;
    }
  }

  double s = (opts.method == RootMethod::Newton && std::abs(elo.f) < std::abs(ehi.f)) ? lo : hi;
  Eval es = (s == lo) ? elo : ehi;
  if (opts.method == RootMethod::Bisection) {
    s = 0.5 * (lo + hi);
    es = fn(s);
  }
  for (int it = 0; it < opts.max_iter; ++it) {
    if (std::abs(es.f) <= 0.25 * tol) return polish(s, es);
    if (es.f < 0.0) {
      lo = s;
    } else {
      hi = s;
    }
    double next = 0.5 * (lo + hi);
    if (opts.method == RootMethod::Newton && es.df > 0.0) {
      const double newton = s - es.f / es.df;
      if (newton > lo && newton < hi) next = newton;
    }
    if (next == s || hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(s))) {
      if (std::abs(es.f) <= tol) return s;
      es = fn(next);
      if (std::abs(es.f) <= tol) return next;
      break;
    }
    s = next;
    es = fn(s);
  }
  if (std::abs(es.f) <= tol) return s;
  std::ostringstream os;
  os << what << " cone root did not converge (residual " << es.f << ")";
  throw ConvergenceError(os.str());
}

// Segment whose polynomial describes the root; roots on a junction use the
// requested side.
std::pair<std::size_t, Side> pick_segment(const PiecewisePath& path, double s, const ConeOptions& opts) {
  const auto junctions = path.junctions();
  const double snap = opts.snap * std::max(1.0, std::abs(s));
  auto it = std::lower_bound(junctions.begin(), junctions.end(), s - snap);
  if (it != junctions.end() && std::abs(*it - s) <= snap) {
    return {path.segment_index(*it, opts.side), opts.side};
  }
  return {path.segment_index(s, Side::Right), Side::Right};
}

}  // namespace

ConeSolution cone_time(const PiecewisePath& path, const Event& event, Branch branch,
                       const ConeOptions& opts) {
  const double sign = branch == Branch::Retarded ? 1.0 : -1.0;
  // Retarded: F(s) = s - t + |x - X(s)|;  advanced: F(s) = s - t - |x - X(s)|.
  auto fn = [&](double s) {
    const std::size_t i = path.segment_index(std::clamp(s, path.t_start(), path.t_end()));
    const auto& seg = path.segments()[i];
    const Vec3 d = event.x - seg.position(s);
    const double r = norm(d);
    const double nv = r > 0.0 ? dot(d, seg.velocity(s)) / r : 0.0;
    return Eval{s - event.t + sign * r, 1.0 - sign * nv};
  };
  const double t_ref = std::clamp(event.t, path.t_start(), path.t_end());
  const double reach = norm(event.x - path.position(t_ref));
  const double tol = opts.tol * std::max({1.0, std::abs(event.t), reach});
  const double guess = event.t - sign * reach;
  const double s = solve_increasing(fn, path.t_start(), path.t_end(), guess, tol, opts,
                                    branch == Branch::Retarded ? "retarded" : "advanced");

  const auto [index, side] = pick_segment(path, s, opts);
  const State st = path.segments()[index].state(s);
  ConeSolution sol;
  sol.t_k = s;
  sol.x = st.x;
  sol.v = st.v;
  sol.a = st.a;
  const Vec3 d = event.x - st.x;
  sol.r = norm(d);
  sol.n_hat = sol.r > 0.0 ? d / sol.r : Vec3{};
  sol.dilation = 1.0 / (1.0 - sign * dot(sol.n_hat, st.v));
  sol.side = side;
  return sol;
}

ConeSolution cone_time(const PiecewiseTrajectory& traj, const Event& event, Branch branch,
                       const ConeOptions& opts) {
  return cone_time(traj.path(), event, branch, opts);
}

FarCone far_cone(const PiecewisePath& path, double t, const Vec3& n, double R, Branch branch,
                 const ConeOptions& opts) {
  const double sign = branch == Branch::Retarded ? 1.0 : -1.0;
  const double shifted = t - sign * R;
  // Retarded: F(s) = s - (t - R) - n.X(s);  advanced: F(s) = s - (t + R) + n.X(s).
  auto fn = [&](double s) {
    const std::size_t i = path.segment_index(std::clamp(s, path.t_start(), path.t_end()));
    const auto& seg = path.segments()[i];
    return Eval{s - shifted - sign * dot(n, seg.position(s)), 1.0 - sign * dot(n, seg.velocity(s))};
  };
  const double tol = opts.tol * std::max({1.0, std::abs(t), R});
  const double t_ref = std::clamp(shifted, path.t_start(), path.t_end());
  const double guess = shifted + sign * dot(n, path.position(t_ref));
  const double s = solve_increasing(fn, path.t_start(), path.t_end(), guess, tol, opts,
                                    branch == Branch::Retarded ? "retarded far-field" : "advanced far-field");
  const auto [index, side] = pick_segment(path, s, opts);
  FarCone out;
  out.t_k = s;
  out.state = path.segments()[index].state(s);
  out.dilation = 1.0 / (1.0 - sign * dot(n, out.state.v));
  out.side = side;
  return out;
}

double far_cone_time(const PiecewiseTrajectory& traj, double t, const Vec3& n, double R,
                     Branch branch, const ConeOptions& opts) {
  return far_cone(traj.path(), t, n, R, branch, opts).t_k;
}

std::pair<double, double> influence_interval(const PiecewiseTrajectory& traj1,
                                             const PiecewiseTrajectory& traj2, double t2,
                                             const ConeOptions& opts) {
  const Event e{t2, traj2.path().position(t2)};
  const double lo = cone_time(traj1, e, Branch::Retarded, opts).t_k;
  const double hi = cone_time(traj1, e, Branch::Advanced, opts).t_k;
  return {lo, hi};
}

}  // namespace wfvar
