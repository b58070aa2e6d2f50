#include "wfvar/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "wfvar/error.hpp"

namespace wfvar {

namespace {

// Relative slack for domain membership; covers round-off in cone roots that
// land on a domain edge.
constexpr double kDomainSlack = 1e-10;

double slack_at(double t) { return kDomainSlack * std::max(1.0, std::abs(t)); }

// Coefficients of p(s + delta) in powers of s.
std::vector<double> taylor_shift(const std::vector<double>& c, double delta) {
  std::vector<double> out(c);
  if (delta == 0.0) return out;
  // Repeated synthetic division (Horner shift).
  const std::size_t n = out.size();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t k = n - 1; k > i; --k) out[k - 1] += delta * out[k];
  }
  return out;
}

double poly_derivative(const std::vector<double>& c, double s, int order) {
  const int n = static_cast<int>(c.size());
  if (order >= n) return 0.0;
  double acc = 0.0;
  for (int k = n - 1; k >= order; --k) {
    double factor = 1.0;
    for (int j = 0; j < order; ++j) factor *= static_cast<double>(k - j);
    acc = acc * s + factor * c[static_cast<std::size_t>(k)];
  }
  return acc;
}

std::vector<double> add_poly(const std::vector<double>& a, const std::vector<double>& b,
                             double eps) {
  std::vector<double> out(std::max(a.size(), b.size()), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) out[i] += a[i];
  for (std::size_t i = 0; i < b.size(); ++i) out[i] += eps * b[i];
  return out;
}

}  // namespace

// --- Segment ----------------------------------------------------------------

Segment::Segment(double t0, double t1, std::array<std::vector<double>, 3> coeffs)
    : t0_(t0), t1_(t1), coeffs_(std::move(coeffs)) {
  if (!(t0 < t1) || !std::isfinite(t0) || !std::isfinite(t1)) {
    std::ostringstream os;
    os << "segment requires t_start < t_end, got [" << t0 << ", " << t1 << "]";
    throw DomainError(os.str());
  }
  for (auto& c : coeffs_) {
    if (c.empty()) c.push_back(0.0);
    for (double v : c) {
      if (!std::isfinite(v)) throw DomainError("segment coefficient is not finite");
    }
  }
}

std::size_t Segment::degree() const {
  std::size_t d = 0;
  for (const auto& c : coeffs_) d = std::max(d, c.size() - 1);
  return d;
}

Vec3 Segment::derivative(double t, int order) const {
  const double s = t - t0_;
  return {poly_derivative(coeffs_[0], s, order), poly_derivative(coeffs_[1], s, order),
          poly_derivative(coeffs_[2], s, order)};
}

State Segment::state(double t) const { return {derivative(t, 0), derivative(t, 1), derivative(t, 2)}; }

Segment Segment::restricted(double a, double b) const {
  std::array<std::vector<double>, 3> c;
  for (int k = 0; k < 3; ++k) c[static_cast<std::size_t>(k)] = taylor_shift(coeffs_[static_cast<std::size_t>(k)], a - t0_);
  return Segment(a, b, std::move(c));
}

// --- PiecewisePath ----------------------------------------------------------

PiecewisePath::PiecewisePath(std::vector<Segment> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) throw DomainError("piecewise path needs at least one segment");
}

double PiecewisePath::t_start() const {
  if (segments_.empty()) throw DomainError("empty path");
  return segments_.front().t0();
}

double PiecewisePath::t_end() const {
  if (segments_.empty()) throw DomainError("empty path");
  return segments_.back().t1();
}

std::vector<double> PiecewisePath::junctions() const {
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < segments_.size(); ++i) out.push_back(segments_[i].t1());
  return out;
}

bool PiecewisePath::contains(double t) const {
  if (segments_.empty()) return false;
  return t >= t_start() - slack_at(t) && t <= t_end() + slack_at(t);
}

std::size_t PiecewisePath::segment_index(double t, Side side) const {
  if (!contains(t)) {
    std::ostringstream os;
    os << "time " << t << " outside trajectory domain";
    if (!segments_.empty()) os << " [" << t_start() << ", " << t_end() << "]";
    throw DomainError(os.str());
  }
  const std::size_t n = segments_.size();
  if (side == Side::Right) {
    // Last segment with t0 <= t.
    auto it = std::upper_bound(segments_.begin(), segments_.end(), t,
                               [](double value, const Segment& s) { return value < s.t0(); });
    if (it == segments_.begin()) return 0;
    return static_cast<std::size_t>(it - segments_.begin()) - 1;
  }
  // First segment with t1 >= t.
  auto it = std::lower_bound(segments_.begin(), segments_.end(), t,
                             [](const Segment& s, double value) { return s.t1() < value; });
  if (it == segments_.end()) return n - 1;
  return static_cast<std::size_t>(it - segments_.begin());
}

State PiecewisePath::state(double t, Side side) const {
  return segments_[segment_index(t, side)].state(t);
}

Vec3 PiecewisePath::position(double t) const { return segments_[segment_index(t)].position(t); }

Vec3 PiecewisePath::derivative(double t, int order, Side side) const {
  return segments_[segment_index(t, side)].derivative(t, order);
}

// --- validation ---------------------------------------------------------------

double ValidationReport::max_continuity_defect() const {
  double m = 0.0;
  for (double d : continuity_defects) m = std::max(m, d);
  return m;
}

bool ValidationReport::ok(double continuity_tol) const {
  return times_monotone && subluminal() && max_continuity_defect() <= continuity_tol;
}

namespace {

// Maximum of |v| on one segment: dense samples plus the zeros of v.a between
// them (the extrema of |v|^2).
double segment_max_speed(const Segment& seg) {
  constexpr int kSamples = 64;
  const double h = seg.length() / (kSamples - 1);
  auto speed2 = [&](double t) { return norm2(seg.velocity(t)); };
  auto slope = [&](double t) { return dot(seg.velocity(t), seg.acceleration(t)); };
  double best = 0.0;
  double prev_t = seg.t0();
  double prev_g = slope(prev_t);
  best = std::max(best, speed2(prev_t));
  for (int i = 1; i < kSamples; ++i) {
    const double t = (i == kSamples - 1) ? seg.t1() : seg.t0() + i * h;
    const double g = slope(t);
    best = std::max(best, speed2(t));
    if ((prev_g > 0.0 && g < 0.0) || (prev_g < 0.0 && g > 0.0)) {
      double lo = prev_t;
      double hi = t;
      double glo = prev_g;
      for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, std::abs(hi)); ++it) {
        const double mid = 0.5 * (lo + hi);
        const double gm = slope(mid);
        if ((gm > 0.0) == (glo > 0.0)) {
          lo = mid;
          glo = gm;
        } else {
          hi = mid;
        }
      }
      best = std::max(best, speed2(0.5 * (lo + hi)));
    }
    prev_t = t;
    prev_g = g;
  }
  return std::sqrt(best);
}

}  // namespace

ValidationReport validate(const PiecewisePath& path) {
  ValidationReport report;
  const auto& segs = path.segments();
  for (std::size_t i = 0; i < segs.size(); ++i) {
    report.max_speed = std::max(report.max_speed, segment_max_speed(segs[i]));
    if (i + 1 < segs.size()) {
      const double tl = segs[i].t1();
      if (segs[i + 1].t0() != tl || !(segs[i + 1].t1() > segs[i + 1].t0())) {
        report.times_monotone = false;
      }
      report.continuity_defects.push_back(norm(segs[i].position(tl) - segs[i + 1].position(tl)));
    }
  }
  return report;
}

ValidationReport validate(const PiecewiseTrajectory& traj) { return validate(traj.path()); }

void require_valid(const PiecewiseTrajectory& traj, double continuity_tol) {
  const ValidationReport r = validate(traj);
  if (!r.times_monotone) throw DomainError("segment times are not strictly increasing and abutting");
  if (!r.subluminal()) {
    std::ostringstream os;
    os << "trajectory speed reaches " << r.max_speed;
    throw SuperluminalError(os.str());
  }
  if (r.max_continuity_defect() > continuity_tol) {
    std::ostringstream os;
    os << "position jump of " << r.max_continuity_defect() << " at a junction";
    throw DomainError(os.str());
  }
}

State evaluate_state(const PiecewiseTrajectory& traj, double t, Side side) {
  return traj.path().state(t, side);
}

PiecewiseTrajectory polygonal_from_vertices(std::span<const Vertex> vertices,
                                            ParticleParams particle) {
  if (vertices.size() < 2) throw DomainError("polygonal path needs at least two vertices");
  if (!(particle.mass > 0.0)) throw DomainError("particle mass must be positive");
  std::vector<Segment> segs;
  segs.reserve(vertices.size() - 1);
  for (std::size_t i = 0; i + 1 < vertices.size(); ++i) {
    const auto& [ta, xa] = vertices[i];
    const auto& [tb, xb] = vertices[i + 1];
    if (!(tb > ta)) throw DomainError("vertex times must be strictly increasing");
    const Vec3 v = (xb - xa) / (tb - ta);
    if (norm(v) >= 1.0) {
      std::ostringstream os;
      os << "chord speed " << norm(v) << " on [" << ta << ", " << tb << "]";
      throw SuperluminalError(os.str());
    }
    segs.emplace_back(ta, tb,
                      std::array<std::vector<double>, 3>{std::vector<double>{xa.x, v.x},
                                                         std::vector<double>{xa.y, v.y},
                                                         std::vector<double>{xa.z, v.z}});
  }
  return PiecewiseTrajectory(std::move(segs), particle);
}

// --- construction helpers ---------------------------------------------------

Segment hermite_cubic(double t0, double t1, const Vec3& x0, const Vec3& v0, const Vec3& x1,
                      const Vec3& v1) {
  const double h = t1 - t0;
  std::array<std::vector<double>, 3> c;
  for (int k = 0; k < 3; ++k) {
    const double p0 = x0[k], p1 = x1[k], m0 = v0[k], m1 = v1[k];
    const double c2 = (3.0 * (p1 - p0) / h - 2.0 * m0 - m1) / h;
    const double c3 = (2.0 * (p0 - p1) / h + m0 + m1) / (h * h);
    c[static_cast<std::size_t>(k)] = {p0, m0, c2, c3};
  }
  return Segment(t0, t1, std::move(c));
}

Segment hermite_quintic(double t0, double t1, const State& s0, const State& s1) {
  const double h = t1 - t0;
  std::array<std::vector<double>, 3> c;
  for (int k = 0; k < 3; ++k) {
    const double p0 = s0.x[k], v0 = s0.v[k], a0 = s0.a[k];
    const double p1 = s1.x[k], v1 = s1.v[k], a1 = s1.a[k];
    const double c0 = p0, c1 = v0, c2 = 0.5 * a0;
    // Remaining residuals at s = h after the Taylor part.
    const double r0 = p1 - (c0 + c1 * h + c2 * h * h);
    const double r1 = v1 - (c1 + 2.0 * c2 * h);
    const double r2 = a1 - 2.0 * c2;
    const double h2 = h * h, h3 = h2 * h, h4 = h3 * h, h5 = h4 * h;
    const double c3 = (10.0 * r0 - 4.0 * r1 * h + 0.5 * r2 * h2) / h3;
    const double c4 = (-15.0 * r0 + 7.0 * r1 * h - r2 * h2) / h4;
    const double c5 = (6.0 * r0 - 3.0 * r1 * h + 0.5 * r2 * h2) / h5;
    c[static_cast<std::size_t>(k)] = {c0, c1, c2, c3, c4, c5};
  }
  return Segment(t0, t1, std::move(c));
}

PiecewiseTrajectory sample_motion(const std::function<State(double)>& motion,
                                  std::span<const double> knots, ParticleParams particle,
                                  int degree) {
  if (knots.size() < 2) throw DomainError("sample_motion needs at least two knots");
  if (degree != 3 && degree != 5) throw ConfigError("sample_motion supports degree 3 or 5");
  std::vector<Segment> segs;
  State prev = motion(knots[0]);
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const State next = motion(knots[i + 1]);
    if (degree == 3) {
      segs.push_back(hermite_cubic(knots[i], knots[i + 1], prev.x, prev.v, next.x, next.v));
    } else {
      segs.push_back(hermite_quintic(knots[i], knots[i + 1], prev, next));
    }
    prev = next;
  }
  return PiecewiseTrajectory(std::move(segs), particle);
}

PiecewisePath restrict_path(const PiecewisePath& path, double a, double b) {
  if (!(a < b)) throw DomainError("restrict_path requires a < b");
  if (!path.contains(a) || !path.contains(b)) throw DomainError("restrict_path window outside domain");
  std::vector<Segment> out;
  for (const auto& seg : path.segments()) {
    const double lo = std::max(a, seg.t0());
    const double hi = std::min(b, seg.t1());
    if (hi > lo) out.push_back(seg.restricted(lo, hi));
  }
  if (out.empty()) out.push_back(path.segments()[path.segment_index(a)].restricted(a, b));
  return PiecewisePath(std::move(out));
}

PiecewisePath split_at(const PiecewisePath& path, double t) {
  std::vector<Segment> out;
  for (const auto& seg : path.segments()) {
    if (t > seg.t0() && t < seg.t1()) {
      out.push_back(seg.restricted(seg.t0(), t));
      out.push_back(seg.restricted(t, seg.t1()));
    } else {
      out.push_back(seg);
    }
  }
  return PiecewisePath(std::move(out));
}

PiecewiseTrajectory splice(const PiecewiseTrajectory& primary, const PiecewiseTrajectory& fallback) {
  const double a = primary.t_start();
  const double b = primary.t_end();
  std::vector<Segment> out;
  const double tol_a = slack_at(a);
  const double tol_b = slack_at(b);
  if (fallback.t_start() < a - tol_a && fallback.t_end() >= a - tol_a) {
    for (const auto& seg : fallback.segments()) {
      if (seg.t0() >= a - tol_a) break;
      out.push_back(seg.t1() > a ? seg.restricted(seg.t0(), a) : seg);
    }
    // Snap the last fallback segment onto the primary start.
    if (!out.empty() && out.back().t1() != a) out.back() = out.back().restricted(out.back().t0(), a);
  }
  for (const auto& seg : primary.segments()) out.push_back(seg);
  if (fallback.t_end() > b + tol_b && fallback.t_start() <= b + tol_b) {
    bool first = true;
    for (const auto& seg : fallback.segments()) {
      if (seg.t1() <= b + tol_b) continue;
      out.push_back(first ? seg.restricted(b, seg.t1()) : seg);
      first = false;
    }
  }
  return PiecewiseTrajectory(std::move(out), primary.particle());
}

PiecewisePath add_scaled(const PiecewisePath& path, const PiecewisePath& pert, double eps) {
  std::vector<double> cuts;
  for (const auto& s : path.segments()) cuts.push_back(s.t0());
  cuts.push_back(path.t_end());
  for (const auto& s : pert.segments()) {
    cuts.push_back(s.t0());
    cuts.push_back(s.t1());
  }
  std::sort(cuts.begin(), cuts.end());
  cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
  std::vector<Segment> out;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double lo = cuts[i];
    const double hi = cuts[i + 1];
    if (lo < path.t_start() || hi > path.t_end()) continue;
    const double mid = 0.5 * (lo + hi);
    const Segment base = path.segments()[path.segment_index(mid)].restricted(lo, hi);
    if (mid > pert.t_start() && mid < pert.t_end()) {
      const Segment p = pert.segments()[pert.segment_index(mid)].restricted(lo, hi);
      std::array<std::vector<double>, 3> c;
      for (std::size_t k = 0; k < 3; ++k) c[k] = add_poly(base.coeffs()[k], p.coeffs()[k], eps);
      out.emplace_back(lo, hi, std::move(c));
    } else {
      out.push_back(base);
    }
  }
  return PiecewisePath(std::move(out));
}

}  // namespace wfvar
