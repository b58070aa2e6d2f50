#include "wfvar/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <numbers>
#include <sstream>

#include "wfvar/action.hpp"
#include "wfvar/error.hpp"
#include "wfvar/parallel.hpp"

namespace wfvar {

namespace {

const TimeWindow& window_of(const BoundaryData& b, int particle) {
  return particle == 0 ? b.window1 : b.window2;
}

const std::optional<PiecewiseTrajectory>& history_of(const BoundaryData& b, int particle) {
  return particle == 0 ? b.history1 : b.history2;
}

PiecewiseTrajectory with_history(const PiecewiseTrajectory& traj, const std::optional<PiecewiseTrajectory>& h) {
  return h ? splice(traj, *h) : traj;
}

void check_layout(const ParticleDecision& d) {
  if (d.nodes_per_segment < 2) throw ConfigError("need at least 2 nodes per segment");
  if (!(d.window.end > d.window.start)) throw ConfigError("empty variable window");
  double prev = d.window.start;
  for (double t : d.break_times) {
    if (!(t > prev)) throw ConfigError("break times must increase strictly inside the window");
    prev = t;
  }
  if (!(d.window.end > prev)) throw ConfigError("break times must increase strictly inside the window");
  const std::size_t nodes = d.piece_count() * static_cast<std::size_t>(d.nodes_per_segment - 1) + 1;
  if (d.positions.size() != nodes) throw ConfigError("node position count does not match the layout");
  if (d.v_left.size() != d.break_times.size() || d.v_right.size() != d.break_times.size()) {
    throw ConfigError("one velocity pair per break is required");
  }
}

// Clamped C2 cubic spline segments of one piece.
void piece_segments(std::span<const double> t, std::span<const Vec3> x, const Vec3& va, const Vec3& vb,
                    std::vector<Segment>& out) {
  const std::size_t m = t.size() - 1;
  std::vector<Vec3> v(m + 1);
  v[0] = va;
  v[m] = vb;
  if (m > 1) {
    // Thomas algorithm on the interior slope equations.
    const std::size_t k = m - 1;
    std::vector<double> diag(k), upper(k), lower(k);
    std::vector<Vec3> rhs(k);
    for (std::size_t j = 1; j < m; ++j) {
      const double h0 = t[j] - t[j - 1], h1 = t[j + 1] - t[j];
      diag[j - 1] = 2.0 * (1.0 / h0 + 1.0 / h1);
      lower[j - 1] = 1.0 / h0;
      upper[j - 1] = 1.0 / h1;
      rhs[j - 1] = 3.0 * ((x[j] - x[j - 1]) / (h0 * h0) + (x[j + 1] - x[j]) / (h1 * h1));
    }
    rhs[0] -= lower[0] * va;
    rhs[k - 1] -= upper[k - 1] * vb;
    for (std::size_t i = 1; i < k; ++i) {
      const double w = lower[i] / diag[i - 1];
      diag[i] -= w * upper[i - 1];
      rhs[i] -= w * rhs[i - 1];
    }
    v[k] = rhs[k - 1] / diag[k - 1];
    for (std::size_t i = k - 1; i-- > 0;) v[i + 1] = (rhs[i] - upper[i] * v[i + 2]) / diag[i];
  }
  for (std::size_t j = 0; j < m; ++j) out.push_back(hermite_cubic(t[j], t[j + 1], x[j], v[j], x[j + 1], v[j + 1]));
}

std::vector<Segment> spline_segments(const ParticleDecision& d) {
  check_layout(d);
  const std::vector<double> times = d.node_times();
  const auto per = static_cast<std::size_t>(d.nodes_per_segment - 1);
  std::vector<Segment> segs;
  for (std::size_t p = 0; p < d.piece_count(); ++p) {
    const Vec3 va = p == 0 ? d.v_start : d.v_right[p - 1];
    const Vec3 vb = p + 1 == d.piece_count() ? d.v_end : d.v_left[p];
    piece_segments(std::span(times).subspan(p * per, per + 1), std::span(d.positions).subspan(p * per, per + 1),
                   va, vb, segs);
  }
  return segs;
}

std::size_t position_vars(const ParticleDecision& d) { return 3 * (d.positions.size() - 2); }

double max_abs(const Eigen::VectorXd& g) { return g.size() == 0 ? 0.0 : g.cwiseAbs().maxCoeff(); }

}  // namespace

std::vector<double> ParticleDecision::node_times() const {
  std::vector<double> edges{window.start};
  edges.insert(edges.end(), break_times.begin(), break_times.end());
  edges.push_back(window.end);
  std::vector<double> out{window.start};
  const int per = nodes_per_segment - 1;
  for (std::size_t p = 0; p + 1 < edges.size(); ++p) {
    for (int j = 1; j < per; ++j) out.push_back(edges[p] + (edges[p + 1] - edges[p]) * j / per);
    out.push_back(edges[p + 1]);
  }
  return out;
}

std::size_t DecisionVector::free_count(int particle) const {
  const ParticleDecision& d = particles[static_cast<std::size_t>(particle)];
  return position_vars(d) + 6 + 6 * d.break_times.size() + (free_break_times ? d.break_times.size() : 0);
}

Eigen::VectorXd DecisionVector::free_values(int particle) const {
  const ParticleDecision& d = particles[static_cast<std::size_t>(particle)];
  Eigen::VectorXd out(static_cast<Eigen::Index>(free_count(particle)));
  Eigen::Index k = 0;
  for (std::size_t i = 1; i + 1 < d.positions.size(); ++i) {
    for (int c = 0; c < 3; ++c) out[k++] = d.positions[i][c];
  }
  for (int c = 0; c < 3; ++c) out[k++] = d.v_start[c];
  for (int c = 0; c < 3; ++c) out[k++] = d.v_end[c];
  for (std::size_t b = 0; b < d.break_times.size(); ++b) {
    for (int c = 0; c < 3; ++c) out[k++] = d.v_left[b][c];
    for (int c = 0; c < 3; ++c) out[k++] = d.v_right[b][c];
  }
  if (free_break_times) {
    for (double t : d.break_times) out[k++] = t;
  }
  return out;
}

void DecisionVector::set_free_values(int particle, const Eigen::VectorXd& values) {
  ParticleDecision& d = particles[static_cast<std::size_t>(particle)];
  if (static_cast<std::size_t>(values.size()) != free_count(particle)) {
    throw ConfigError("free value count does not match the decision layout");
  }
  Eigen::Index k = 0;
  for (std::size_t i = 1; i + 1 < d.positions.size(); ++i) {
    for (int c = 0; c < 3; ++c) d.positions[i][c] = values[k++];
  }
  for (int c = 0; c < 3; ++c) d.v_start[c] = values[k++];
  for (int c = 0; c < 3; ++c) d.v_end[c] = values[k++];
  for (std::size_t b = 0; b < d.break_times.size(); ++b) {
    for (int c = 0; c < 3; ++c) d.v_left[b][c] = values[k++];
    for (int c = 0; c < 3; ++c) d.v_right[b][c] = values[k++];
  }
  if (free_break_times) {
    for (double& t : d.break_times) t = values[k++];
  }
}

DecisionVector discretize(const BoundaryData& boundary, const PiecewiseTrajectory& traj1,
                          const PiecewiseTrajectory& traj2, int nodes_per_segment,
                          const std::vector<double>& breaks1, const std::vector<double>& breaks2) {
  if (nodes_per_segment < 2) throw ConfigError("need at least 2 nodes per segment");
  DecisionVector out;
  const PiecewiseTrajectory* trajs[] = {&traj1, &traj2};
  const std::vector<double>* breaks[] = {&breaks1, &breaks2};
  for (int p = 0; p < 2; ++p) {
    ParticleDecision& d = out.particles[static_cast<std::size_t>(p)];
    const PiecewiseTrajectory& tr = *trajs[p];
    d.particle = tr.particle();
    d.window = window_of(boundary, p);
    d.break_times = *breaks[p];
    d.nodes_per_segment = nodes_per_segment;
    d.positions.resize(d.piece_count() * static_cast<std::size_t>(nodes_per_segment - 1) + 1);
    d.v_left.resize(d.break_times.size());
    d.v_right.resize(d.break_times.size());
    check_layout(d);
    d.positions.clear();
    d.v_left.clear();
    d.v_right.clear();
    if (!tr.contains(d.window.start) || !tr.contains(d.window.end)) {
      throw DomainError("trajectory does not cover its variable window");
    }
    for (double t : d.node_times()) d.positions.push_back(tr.path().position(t));
    for (double t : d.break_times) {
      d.v_left.push_back(tr.path().state(t, Side::Left).v);
      d.v_right.push_back(tr.path().state(t, Side::Right).v);
    }
    d.v_start = tr.path().state(d.window.start, Side::Right).v;
    d.v_end = tr.path().state(d.window.end, Side::Left).v;
    check_layout(d);
  }
  return out;
}

PiecewiseTrajectory decode(const ParticleDecision& d) { return {spline_segments(d), d.particle}; }

std::vector<Perturbation> decision_basis(const ParticleDecision& d) {
  ParticleDecision zero = d;
  std::fill(zero.positions.begin(), zero.positions.end(), Vec3{});
  std::fill(zero.v_left.begin(), zero.v_left.end(), Vec3{});
  std::fill(zero.v_right.begin(), zero.v_right.end(), Vec3{});
  zero.v_start = {};
  zero.v_end = {};
  std::vector<Perturbation> out;
  for (std::size_t i = 1; i + 1 < d.positions.size(); ++i) {
    for (int c = 0; c < 3; ++c) {
      ParticleDecision e = zero;
      e.positions[i][c] = 1.0;
      out.emplace_back(spline_segments(e));
    }
  }
  for (auto member : {&ParticleDecision::v_start, &ParticleDecision::v_end}) {
    for (int c = 0; c < 3; ++c) {
      ParticleDecision e = zero;
      (e.*member)[c] = 1.0;
      out.emplace_back(spline_segments(e));
    }
  }
  for (std::size_t b = 0; b < d.break_times.size(); ++b) {
    for (auto member : {&ParticleDecision::v_left, &ParticleDecision::v_right}) {
      for (int c = 0; c < 3; ++c) {
        ParticleDecision e = zero;
        (e.*member)[b][c] = 1.0;
        out.emplace_back(spline_segments(e));
      }
    }
  }
  return out;
}

double block_action(const BoundaryData& boundary, const DecisionVector& x, int particle,
                    const QuadratureOptions& quad) {
  const PiecewiseTrajectory t1 = decode(x.particles[0]);
  const PiecewiseTrajectory t2 = decode(x.particles[1]);
  return particle == 0 ? action(t1, t2, boundary.window1, boundary, quad) : action_second(t1, t2, boundary, quad);
}

Eigen::VectorXd block_gradient(const BoundaryData& boundary, const DecisionVector& x, int particle,
                               const QuadratureOptions& quad) {
  const auto p = static_cast<std::size_t>(particle);
  const ParticleDecision& d = x.particles[p];
  const PiecewiseTrajectory self = decode(d);
  const PiecewiseTrajectory partner = with_history(decode(x.particles[1 - p]), history_of(boundary, 1 - particle));
  const std::vector<Perturbation> basis = decision_basis(d);
  Eigen::VectorXd g(static_cast<Eigen::Index>(x.free_count(particle)));
  g.head(static_cast<Eigen::Index>(basis.size())) = frechet_gradient(self, partner, d.window, basis, quad);
  if (x.free_break_times) {
    const Eigen::VectorXd base = x.free_values(particle);
    const auto off = static_cast<Eigen::Index>(basis.size());
    for (Eigen::Index k = 0; k < static_cast<Eigen::Index>(d.break_times.size()); ++k) {
      const double h = 1e-5 * std::max(1.0, d.window.length());
      DecisionVector xp = x, xm = x;
      Eigen::VectorXd vp = base, vm = base;
      vp[off + k] += h;
      vm[off + k] -= h;
      xp.set_free_values(particle, vp);
      xm.set_free_values(particle, vm);
      g[off + k] = (block_action(boundary, xp, particle, quad) - block_action(boundary, xm, particle, quad)) / (2 * h);
    }
  }
  return g;
}

MinimizerReport verify(const PiecewiseTrajectory& traj1, const PiecewiseTrajectory& traj2,
                       const BoundaryData& boundary, const VerifyOptions& opts) {
  if (opts.chebyshev_points < 1) throw ConfigError("need at least one Chebyshev point");
  MinimizerReport report;
  const PiecewiseTrajectory* trajs[] = {&traj1, &traj2};
  for (int p = 0; p < 2; ++p) {
    const PiecewiseTrajectory& self = *trajs[p];
    const PiecewiseTrajectory partner = with_history(*trajs[1 - p], history_of(boundary, 1 - p));
    const TimeWindow& w = window_of(boundary, p);
    if (!(w.end > w.start)) continue;
    const auto cuts =
        smooth_breaks(self.path(), partner.path(), w);

    std::vector<SegmentResidual> segs;
    for (const auto& seg : self.segments()) {
      const double a = std::max(seg.t0(), w.start), b = std::min(seg.t1(), w.end);
      if (b > a) segs.push_back({p + 1, a, b, 0.0});
    }
    parallel_for(segs.size(), [&](std::size_t i) {
      SegmentResidual& s = segs[i];
      const int n = opts.chebyshev_points;
      for (int k = 0; k < n; ++k) {
        const double t = 0.5 * (s.t0 + s.t1) + 0.5 * (s.t1 - s.t0) * std::cos((2 * k + 1) * std::numbers::pi / (2 * n));
        s.max_el = std::max(s.max_el, norm(el_residual(self, partner, t, Side::Right, cuts)));
      }
    });
    for (const auto& s : segs) report.max_el_residual = std::max(report.max_el_residual, s.max_el);
    report.segments.insert(report.segments.end(), segs.begin(), segs.end());

    for (double l : self.junctions()) {
      if (l <= w.start || l >= w.end) continue;
      const Vec3 jump = self.path().state(l, Side::Right).v - self.path().state(l, Side::Left).v;
      if (norm(jump) <= opts.break_jump_tol) continue;
      BreakResidual r;
      r.t = l;
      r.particle = p + 1;
      r.dp = momentum_current(self, partner, l, Side::Right) - momentum_current(self, partner, l, Side::Left);
      r.de = energy_current(self, partner, l, Side::Right) - energy_current(self, partner, l, Side::Left);
      report.max_break_residual = std::max({report.max_break_residual, norm(r.dp), std::abs(r.de)});
      report.breaks.push_back(r);
    }
  }
  return report;
}

namespace {

struct BlockOutcome {
  int steps = 0;
  bool failed = false;
};

bool feasible(const DecisionVector& x, int particle) {
  try {
    return validate(decode(x.particles[static_cast<std::size_t>(particle)])).max_speed < 1.0;
  } catch (const ConfigError&) {
    return false;
  }
}

BlockOutcome run_block(const BoundaryData& boundary, DecisionVector& x, int particle, const MinimizeOptions& opts,
                       int budget, double& radius, std::vector<StepRecord>& trace) {
  BlockOutcome out;
  Eigen::VectorXd v = x.free_values(particle);
  double f = block_action(boundary, x, particle, opts.quadrature);
  Eigen::VectorXd g = block_gradient(boundary, x, particle, opts.quadrature);
  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> memory;
  while (out.steps < std::min(budget, opts.block_iter) && max_abs(g) >= opts.gtol) {
    // Two-loop recursion.
    Eigen::VectorXd q = g;
    std::vector<double> alpha(memory.size());
    for (std::size_t i = memory.size(); i-- > 0;) {
      const auto& [s, y] = memory[i];
      alpha[i] = s.dot(q) / y.dot(s);
      q -= alpha[i] * y;
    }
    if (!memory.empty()) {
      const auto& [s, y] = memory.back();
      q *= s.dot(y) / y.dot(y);
    }
    for (std::size_t i = 0; i < memory.size(); ++i) {
      const auto& [s, y] = memory[i];
      q += (alpha[i] - y.dot(q) / y.dot(s)) * s;
    }
    Eigen::VectorXd dir = -q;
    if (g.dot(dir) >= 0.0) {
      memory.clear();
      dir = -g;
    }
    if (max_abs(dir) > radius) dir *= radius / max_abs(dir);
    const double slope = g.dot(dir);

    double step = 1.0;
    bool accepted = false;
    DecisionVector trial = x;
    double f_new = f;
    while (step > 1e-14) {
      trial.set_free_values(particle, v + step * dir);
      if (!feasible(trial, particle)) {
        radius *= 0.5;
        step *= 0.5;
        continue;
      }
      try {
        f_new = block_action(boundary, trial, particle, opts.quadrature);
      } catch (const CollisionError&) {
        step *= 0.5;
        continue;
      } catch (const InsufficientHistoryError&) {
        step *= 0.5;
        continue;
      }
      if (std::isfinite(f_new) && f_new <= f + 1e-4 * step * slope) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      out.failed = true;
      break;
    }
    const Eigen::VectorXd g_new = block_gradient(boundary, trial, particle, opts.quadrature);
    const Eigen::VectorXd s = step * dir;
    const Eigen::VectorXd y = g_new - g;
    if (s.dot(y) > 1e-16 * s.norm() * y.norm()) {
      memory.emplace_back(s, y);
      if (static_cast<int>(memory.size()) > opts.memory) memory.pop_front();
    }
    x = trial;
    v += s;
    f = f_new;
    g = g_new;
    ++out.steps;
    trace.push_back({particle + 1, f});
  }
  return out;
}

}  // namespace

MinimizeResult minimize(const BoundaryData& boundary, const DecisionVector& init, const MinimizeOptions& opts) {
  for (int p = 0; p < 2; ++p) {
    const ParticleDecision& d = init.particles[static_cast<std::size_t>(p)];
    require_valid(decode(d));
    if (const auto& h = history_of(boundary, p)) {
      for (auto [t, x] : {std::pair{d.window.start, d.positions.front()}, std::pair{d.window.end, d.positions.back()}}) {
        if (h->contains(t) && norm(h->path().position(t) - x) > 1e-9) {
          std::ostringstream os;
          os << "pinned endpoint of particle " << p + 1 << " at t=" << t << " disagrees with its history";
          throw ContractError(os.str());
        }
      }
    }
  }

  MinimizeResult result;
  result.x = init;
  MinimizerReport& rep = result.report;
  std::vector<StepRecord> trace;
  std::array<double, 2> radius{opts.max_step, opts.max_step};
  int total = 0;
  auto grad_norm = [&] {
    double m = 0.0;
    for (int p = 0; p < 2; ++p) {
      if (result.x.free_count(p) > 0) m = std::max(m, max_abs(block_gradient(boundary, result.x, p, opts.quadrature)));
    }
    return m;
  };
  double gnorm = grad_norm();
  while (gnorm >= opts.gtol && total < opts.max_iter) {
    int swept = 0;
    bool failed = false;
    for (int p = 0; p < 2 && total < opts.max_iter; ++p) {
      if (result.x.free_count(p) == 0) continue;
      const BlockOutcome o = run_block(boundary, result.x, p, opts, opts.max_iter - total,
                                       radius[static_cast<std::size_t>(p)], trace);
      swept += o.steps;
      total += o.steps;
      failed = failed || o.failed;
    }
    gnorm = grad_norm();
    if (swept == 0) {
      if (failed) rep.message = "line search failed";
      break;
    }
  }
  if (rep.message.empty() && gnorm >= opts.gtol) rep.message = "iteration cap reached";

  result.traj1 = decode(result.x.particles[0]);
  result.traj2 = decode(result.x.particles[1]);
  const std::string message = rep.message;
  rep = verify(result.traj1, result.traj2, boundary, opts.verify);
  rep.message = message;
  rep.action = block_action(boundary, result.x, 0, opts.quadrature) + block_action(boundary, result.x, 1, opts.quadrature);
  rep.iterations = total;
  rep.trace = std::move(trace);
  rep.gradient_norm = gnorm;
  rep.gradient_converged = gnorm < opts.gtol;
  rep.converged =
      rep.gradient_converged && rep.max_el_residual < opts.el_tol && rep.max_break_residual < opts.break_tol;
  if (rep.message.empty()) rep.message = rep.converged ? "converged" : "gradient converged, residuals above tolerance";
  return result;
}

}  // namespace wfvar
