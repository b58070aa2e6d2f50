#include "wfvar/shortrange.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>

#include <Eigen/Dense>

#include "wfvar/parallel.hpp"

namespace wfvar {

double k12(const Vec3& v1, const Vec3& v2, const Vec3& n) {
  return 1.0 / (1.0 - dot(n, v1)) - 1.0 / (1.0 - dot(n, v2));
}

Vec3 separation_rate(const Vec3& v1, const Vec3& v2, const Vec3& n) {
  return v1 / (1.0 - dot(n, v1)) - v2 / (1.0 - dot(n, v2));
}

Vec3 separation_family(const SeparationFamily& family, double t, const Vec3& n, double dt12) {
  const FamilyPiece p = family.piece(t, n);
  return p.D + dt12 * n - (t - p.t_edge) * cross(n, p.L);
}

// --- real spherical harmonics ------------------------------------------------

std::vector<double> real_sh(int lmax, const Vec3& n) {
  if (lmax < 0) throw DomainError("spherical harmonic degree must be non-negative");
  std::vector<double> out(sh_count(lmax), 0.0);
  const double z = n.z;
  // (x + i y)^m carries the sin^m(theta) e^{i m phi} factor without poles.
  std::complex<double> xy_m(1.0, 0.0);
  const std::complex<double> xy(n.x, n.y);
  double q_mm = 1.0;  // (2m-1)!! without the Condon-Shortley sign
  for (int m = 0; m <= lmax; ++m) {
    if (m > 0) {
      xy_m *= xy;
      q_mm *= (2 * m - 1);
    }
    // Q_l^m(z) with P_l^m = (1 - z^2)^{m/2} Q_l^m.
    double q_prev = 0.0;
    double q = q_mm;
    for (int l = m; l <= lmax; ++l) {
      if (l > m) {
        const double q_next = ((2 * l - 1) * z * q - (l + m - 1) * q_prev) / (l - m);
        q_prev = q;
        q = q_next;
      }
      double ratio = 1.0;  // (l - m)! / (l + m)!
      for (int k = l - m + 1; k <= l + m; ++k) ratio /= k;
      const double K = std::sqrt((2 * l + 1) / (4 * std::numbers::pi) * ratio);
      const std::size_t base = static_cast<std::size_t>(l * l + l);
      if (m == 0) {
        out[base] = K * q;
      } else {
        out[base + static_cast<std::size_t>(m)] = std::numbers::sqrt2 * K * q * xy_m.real();
        out[base - static_cast<std::size_t>(m)] = std::numbers::sqrt2 * K * q * xy_m.imag();
      }
    }
  }
  return out;
}

int ShVectorField::lmax() const {
  std::size_t len = 0;
  for (const auto& c : coeffs) len = std::max(len, c.size());
  int l = 0;
  while (sh_count(l) < len) ++l;
  return l;
}

Vec3 ShVectorField::operator()(const Vec3& n) const {
  const std::vector<double> y = real_sh(lmax(), n);
  Vec3 out;
  for (int k = 0; k < 3; ++k) {
    const auto& c = coeffs[static_cast<std::size_t>(k)];
    double s = 0.0;
    for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * y[i];
    out[k] = s;
  }
  return out;
}

ShVectorField ShVectorField::constant(const Vec3& v) {
  const double y00 = 0.5 / std::sqrt(std::numbers::pi);
  return {{std::vector<double>{v.x / y00}, std::vector<double>{v.y / y00}, std::vector<double>{v.z / y00}}};
}

namespace {

// Fixed check directions: the icosahedron vertices and the Cartesian axes.
const std::vector<Vec3>& check_directions() {
  static const std::vector<Vec3> dirs = [] {
    const double p = std::numbers::phi;
    std::vector<Vec3> out{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
    for (double a : {-1.0, 1.0}) {
      for (double b : {-p, p}) {
        out.push_back(normalized(Vec3{0, a, b}));
        out.push_back(normalized(Vec3{a, b, 0}));
        out.push_back(normalized(Vec3{b, 0, a}));
      }
    }
    return out;
  }();
  return dirs;
}

void require_transverse(const Vec3& v, const Vec3& n, const char* what) {
  if (std::abs(dot(v, n)) > 1e-12 * std::max(1.0, norm(v))) {
    std::ostringstream os;
    os << what << "(n) is not transverse: n." << what << " = " << dot(v, n);
    throw ContractError(os.str());
  }
}

}  // namespace

// --- SH table family ------------------------------------------------------------

SeparationFamilyParams::SeparationFamilyParams(std::vector<Interval> intervals, double t_final,
                                               bool continuous, bool project)
    : intervals_(std::move(intervals)), t_final_(t_final), continuous_(continuous), project_(project) {
  if (intervals_.empty()) throw ConfigError("separation family needs at least one interval");
  for (std::size_t i = 0; i < intervals_.size(); ++i) {
    const double next = i + 1 < intervals_.size() ? intervals_[i + 1].t_edge : t_final_;
    if (!(next > intervals_[i].t_edge)) throw ConfigError("family interval edges must be strictly increasing");
    for (const auto* f : {&intervals_[i].D, &intervals_[i].L}) {
      for (const auto& c : f->coeffs) {
        std::size_t l = 0;
        while (sh_count(static_cast<int>(l)) < c.size()) ++l;
        if (sh_count(static_cast<int>(l)) != c.size() && !c.empty()) {
          throw ConfigError("spherical harmonic table length must be a perfect square");
        }
        for (double x : c) {
          if (!std::isfinite(x)) throw ConfigError("non-finite spherical harmonic coefficient");
        }
      }
    }
    if (!project_) {
      for (const Vec3& n : check_directions()) {
        require_transverse(intervals_[i].D(n), n, "D");
        require_transverse(intervals_[i].L(n), n, "L");
      }
    }
  }
}

FamilyPiece SeparationFamilyParams::piece(double t, const Vec3& n) const {
  if (t < intervals_.front().t_edge || t > t_final_) {
    std::ostringstream os;
    os << "time " << t << " outside the family intervals [" << intervals_.front().t_edge << ", " << t_final_
       << "]";
    throw DomainError(os.str());
  }
  std::size_t s = 0;
  while (s + 1 < intervals_.size() && intervals_[s + 1].t_edge <= t) ++s;
  Vec3 D = transverse(intervals_[0].D(n), n);
  Vec3 L = transverse(intervals_[0].L(n), n);
  for (std::size_t i = 1; i <= s; ++i) {
    const double dt = intervals_[i].t_edge - intervals_[i - 1].t_edge;
    D = continuous_ ? D - dt * cross(n, L) : transverse(intervals_[i].D(n), n);
    L = transverse(intervals_[i].L(n), n);
  }
  return {intervals_[s].t_edge, D, L};
}

// --- function family -----------------------------------------------------------


FunctionFamily::FunctionFamily(std::vector<double> edges, Field D, Field L, bool piecewise_linear)
    : edges_(std::move(edges)), D_(std::move(D)), L_(std::move(L)), linear_(piecewise_linear) {
  if (edges_.size() < 2) throw ConfigError("function family needs at least two edges");
  for (std::size_t i = 1; i < edges_.size(); ++i) {
    if (!(edges_[i] > edges_[i - 1])) throw ConfigError("family interval edges must be strictly increasing");
  }
  for (std::size_t s = 0; s + 1 < edges_.size(); ++s) {
    for (const Vec3& n : check_directions()) {
      require_transverse(D_(s, n), n, "D");
      require_transverse(L_(s, n), n, "L");
    }
  }
}

FamilyPiece FunctionFamily::piece(double t, const Vec3& n) const {
  if (t < edges_.front() || t > edges_.back()) {
    std::ostringstream os;
    os << "time " << t << " outside the family intervals";
    throw DomainError(os.str());
  }
  std::size_t s = 0;
  while (s + 2 < edges_.size() && edges_[s + 1] <= t) ++s;
  FamilyPiece p{edges_[s], D_(s, n), L_(s, n)};
  require_transverse(p.D, n, "D");
  require_transverse(p.L, n, "L");
  return p;
}

// --- polygonal pair family --------------------------------------------------------

PolygonalPairFamily::PolygonalPairFamily(PiecewiseTrajectory traj1, PiecewiseTrajectory traj2)
    : traj1_(std::move(traj1)), traj2_(std::move(traj2)) {
  for (const auto* tr : {&traj1_, &traj2_}) {
    for (const auto& seg : tr->segments()) {
      if (seg.degree() > 1) throw ContractError("polygonal pair family needs polygonal trajectories");
    }
  }
}

FamilyPiece PolygonalPairFamily::piece(double t, const Vec3& n) const {
  const FarCone c1 = far_cone(traj1_.path(), t, n, 0.0, Branch::Retarded);
  const FarCone c2 = far_cone(traj2_.path(), t, n, 0.0, Branch::Retarded);
  const Vec3 w = separation_rate(c1.state.v, c2.state.v, n);
  // Edge: latest vertex image not after t among the two active segments.
  auto image = [&](const PiecewiseTrajectory& tr, const FarCone& c) {
    const auto& seg = tr.segments()[tr.path().segment_index(c.t_k, c.side)];
    return seg.t0() - dot(n, seg.position(seg.t0()));
  };
  const double t_edge = std::min(t, std::max(image(traj1_, c1), image(traj2_, c2)));
  const Vec3 sep = c1.state.x - c2.state.x;
  FamilyPiece p;
  p.t_edge = t_edge;
  p.L = cross(n, w);
  p.D = transverse(sep, n) - (t - t_edge) * transverse(w, n);
  return p;
}

// --- rigidity ---------------------------------------------------------------------

RigidityReport rigidity_check(const Vec3& v1, const Vec3& v2, std::span<const Vec3> n_samples) {
  bool spans = false;
  for (std::size_t i = 0; i < n_samples.size() && !spans; ++i) {
    for (std::size_t j = i + 1; j < n_samples.size() && !spans; ++j) {
      for (std::size_t k = j + 1; k < n_samples.size() && !spans; ++k) {
        spans = std::abs(dot(n_samples[i], cross(n_samples[j], n_samples[k]))) > 1e-9;
      }
    }
  }
  if (!spans) throw InsufficientSamplingError("rigidity check needs three non-coplanar directions");
  if (norm(v1) >= 1.0 || norm(v2) >= 1.0) throw SuperluminalError("rigidity check needs subluminal velocities");
  RigidityReport r;
  for (const Vec3& raw : n_samples) {
    const Vec3 n = normalized(raw);
    const Vec3 w = separation_rate(v1, v2, n);
    r.k12_fit.push_back(dot(n, w));
    r.violations.push_back(norm(transverse(w, n)));
    r.max_violation = std::max(r.max_violation, r.violations.back());
  }
  return r;
}

std::vector<Vec3> cone_directions(const Vec3& axis, double half_angle, int count) {
  const Vec3 a = normalized(axis);
  const Vec3 helper = std::abs(a.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
  const Vec3 e1 = normalized(cross(a, helper));
  const Vec3 e2 = cross(a, e1);
  std::vector<Vec3> out;
  for (int i = 0; i < count; ++i) {
    const double phi = 2.0 * std::numbers::pi * i / count;
    out.push_back(std::cos(half_angle) * a +
                  std::sin(half_angle) * (std::cos(phi) * e1 + std::sin(phi) * e2));
  }
  return out;
}

// --- sewing chains -------------------------------------------------------------------

SewingChain sewing_chain(const PiecewiseTrajectory& traj1, const PiecewiseTrajectory& traj2,
                         ChainLink seed, ChainDirection direction, int count) {
  if (seed.particle != 1 && seed.particle != 2) throw DomainError("seed particle must be 1 or 2");
  SewingChain chain;
  chain.direction = direction;
  const Branch branch = direction == ChainDirection::Forward ? Branch::Advanced : Branch::Retarded;
  ChainLink cur = seed;
  for (int i = 0; i < count; ++i) {
    const PiecewiseTrajectory& from = cur.particle == 1 ? traj1 : traj2;
    const PiecewiseTrajectory& to = cur.particle == 1 ? traj2 : traj1;
    try {
      const Event e{cur.t, from.path().position(cur.t)};
      cur = {3 - cur.particle, cone_time(to, e, branch).t_k};
    } catch (const InsufficientHistoryError&) {
      chain.truncated = true;
      break;
    } catch (const DomainError&) {
      chain.truncated = true;
      break;
    }
    chain.links.push_back(cur);
  }
  return chain;
}

// --- partner construction ------------------------------------------------------------

namespace {

// x1(t1, n) for the trial value s = n.x1.
Vec3 candidate(const PiecewiseTrajectory& traj2, const SeparationFamily& family, double t1,
               const Vec3& n, double s) {
  const double t = t1 - s;
  const FarCone c2 = far_cone(traj2.path(), t, n, 0.0, Branch::Retarded);
  return c2.state.x + separation_family(family, t, n, t1 - c2.t_k);
}

struct Consensus {
  Vec3 mean;
  double spread = 0.0;
};

Consensus solve_consensus(const PiecewiseTrajectory& traj2, const SeparationFamily& family, double t1,
                          std::span<const Vec3> dirs, Vec3 guess, int max_iter) {
  const auto m = static_cast<Eigen::Index>(dirs.size());
  auto residual = [&](const Vec3& x) {
    Eigen::VectorXd r(3 * m);
    for (Eigen::Index i = 0; i < m; ++i) {
      const Vec3& n = dirs[static_cast<std::size_t>(i)];
      const Vec3 d = transverse(x - candidate(traj2, family, t1, n, dot(n, x)), n);
      r.segment<3>(3 * i) << d.x, d.y, d.z;
    }
    return r;
  };
  Vec3 x = guess;
  Eigen::VectorXd r = residual(x);
  double lambda = 1e-8;
  bool converged = false;
  for (int it = 0; it < max_iter; ++it) {
    if (r.norm() < 1e-14 * std::max(1.0, norm(x))) {
      converged = true;
      break;
    }
    Eigen::MatrixXd J(3 * m, 3);
    const double h = 1e-7 * std::max(1.0, norm(x));
    for (int k = 0; k < 3; ++k) {
      Vec3 xp = x, xm = x;
      xp[k] += h;
      xm[k] -= h;
      J.col(k) = (residual(xp) - residual(xm)) / (2 * h);
    }
    const Eigen::Matrix3d A = J.transpose() * J;
    const Eigen::Vector3d g = J.transpose() * r;
    bool accepted = false;
    for (int k = 0; k < 20; ++k) {
      const Eigen::Vector3d step = (A + lambda * Eigen::Matrix3d::Identity()).ldlt().solve(-g);
      const Vec3 xn = x + Vec3{step[0], step[1], step[2]};
      const Eigen::VectorXd rn = residual(xn);
      if (rn.norm() <= r.norm()) {
        const bool tiny = step.norm() < 1e-10 * std::max(1.0, norm(x)) || r.norm() - rn.norm() <= 1e-13 * r.norm();
        x = xn;
        r = rn;
        lambda = std::max(lambda * 0.1, 1e-12);
        accepted = true;
        if (tiny) converged = true;
        break;
      }
      lambda *= 10.0;
    }
    if (!accepted) {
      // No descent direction left: x is a least-squares minimum.
      converged = true;
      break;
    }
    if (converged) break;
  }
  if (!converged || !is_finite(x)) {
    std::ostringstream os;
    os << "partner consensus solve did not converge at t1=" << t1;
    throw ConvergenceError(os.str());
  }
  Consensus out;
  std::vector<Vec3> cands;
  for (const Vec3& n : dirs) {
    cands.push_back(candidate(traj2, family, t1, n, dot(n, x)));
    out.mean += cands.back();
  }
  out.mean /= static_cast<double>(cands.size());
  for (const Vec3& c : cands) out.spread = std::max(out.spread, norm(c - out.mean));
  return out;
}

PiecewiseTrajectory fit_polygonal(std::span<const double> t, std::span<const Vec3> x, ParticleParams p) {
  std::vector<Vertex> verts{{t[0], x[0]}};
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (verts.size() >= 2 && i + 1 <= t.size()) {
      const auto& [ta, xa] = verts[verts.size() - 2];
      const auto& [tb, xb] = verts.back();
      const Vec3 v_prev = (xb - xa) / (tb - ta);
      const Vec3 v_next = (x[i] - xb) / (t[i] - tb);
      if (norm(v_prev - v_next) < 1e-9) verts.pop_back();
    }
    verts.emplace_back(t[i], x[i]);
  }
  return polygonal_from_vertices(verts, p);
}

PiecewiseTrajectory fit_cubic(std::span<const double> t, std::span<const Vec3> x, ParticleParams p) {
  const std::size_t k = t.size();
  std::vector<Vec3> v(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (k == 2) {
      v[i] = (x[1] - x[0]) / (t[1] - t[0]);
    } else if (i == 0) {
      v[i] = (x[1] - x[0]) / (t[1] - t[0]);
    } else if (i + 1 == k) {
      v[i] = (x[k - 1] - x[k - 2]) / (t[k - 1] - t[k - 2]);
    } else {
      // Three-point derivative on a non-uniform grid.
      const double h0 = t[i] - t[i - 1], h1 = t[i + 1] - t[i];
      v[i] = (h0 * h0 * (x[i + 1] - x[i]) + h1 * h1 * (x[i] - x[i - 1])) / (h0 * h1 * (h0 + h1));
    }
  }
  std::vector<Segment> segs;
  for (std::size_t i = 0; i + 1 < k; ++i) segs.push_back(hermite_cubic(t[i], t[i + 1], x[i], v[i], x[i + 1], v[i + 1]));
  PiecewiseTrajectory out(std::move(segs), p);
  require_valid(out, 1e-12);
  return out;
}

}  // namespace

PartnerResult construct_partner(const PiecewiseTrajectory& traj2, const SeparationFamily& family,
                                std::span<const Vec3> n_grid, std::span<const double> t1_grid,
                                ParticleParams particle1, const PartnerOptions& opts) {
  if (t1_grid.size() < 2) throw ConfigError("partner construction needs at least two t1 values");
  for (std::size_t i = 1; i < t1_grid.size(); ++i) {
    if (!(t1_grid[i] > t1_grid[i - 1])) throw ConfigError("t1 grid must be strictly increasing");
  }
  std::vector<Vec3> dirs;
  for (const Vec3& n : n_grid) dirs.push_back(normalized(n));
  bool spans = false;
  for (std::size_t i = 0; i < dirs.size() && !spans; ++i) {
    for (std::size_t j = i + 1; j < dirs.size() && !spans; ++j) {
      for (std::size_t k = j + 1; k < dirs.size() && !spans; ++k) {
        spans = std::abs(dot(dirs[i], cross(dirs[j], dirs[k]))) > 1e-9;
      }
    }
  }
  if (!spans) throw InsufficientSamplingError("partner construction needs three non-coplanar directions");

  // Each t1 is solved from the partner position at t1 as the starting guess.
  std::vector<Consensus> solved(t1_grid.size());
  parallel_for(t1_grid.size(), [&](std::size_t i) {
    const double t1 = t1_grid[i];
    Vec3 guess = traj2.path().position(std::clamp(t1, traj2.t_start(), traj2.t_end()));
    // A first pass along the average direction fixes the offset.
    Vec3 avg;
    for (const Vec3& n : dirs) avg += candidate(traj2, family, t1, n, dot(n, guess)) - guess;
    guess += avg / static_cast<double>(dirs.size());
    solved[i] = solve_consensus(traj2, family, t1, dirs, guess, opts.max_iter);
  });

  ConsistencyReport report;
  std::vector<Vec3> means;
  for (std::size_t i = 0; i < t1_grid.size(); ++i) {
    report.t1.push_back(t1_grid[i]);
    report.spread.push_back(solved[i].spread);
    report.mean.push_back(solved[i].mean);
    report.max_spread = std::max(report.max_spread, solved[i].spread);
  }
  if (report.max_spread > opts.tolerance) {
    std::ostringstream os;
    os << "separation family is inconsistent: candidate spread " << report.max_spread << " exceeds "
       << opts.tolerance;
    throw InconsistentParamsError(os.str(), std::move(report));
  }
  const bool polygonal =
      opts.fit == PartnerFit::Polygonal || (opts.fit == PartnerFit::Auto && family.piecewise_linear());
  PiecewiseTrajectory traj1 = polygonal ? fit_polygonal(t1_grid, report.mean, particle1)
                                        : fit_cubic(t1_grid, report.mean, particle1);
  return {std::move(traj1), std::move(report)};
}

}  // namespace wfvar
