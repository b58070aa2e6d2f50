#pragma once

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "wfvar/vec3.hpp"

namespace wfvar {

/// Selects the one-sided limit at a breaking point.
enum class Side { Left, Right };

struct ParticleParams {
  double mass = 1.0;
  double charge = 1.0;
};

/// Position, velocity and acceleration at one instant.
struct State {
  Vec3 x;
  Vec3 v;
  Vec3 a;
};

/// Polynomial path piece on [t0, t1]. Coefficients are per axis in powers of
/// the local time s = t - t0, lowest order first.
class Segment {
 public:
  Segment(double t0, double t1, std::array<std::vector<double>, 3> coeffs);

  double t0() const { return t0_; }
  double t1() const { return t1_; }
  double length() const { return t1_ - t0_; }
  const std::array<std::vector<double>, 3>& coeffs() const { return coeffs_; }
  std::size_t degree() const;

  /// Derivative of order `order` at absolute time t. Evaluation slightly
  /// outside [t0, t1] extrapolates the polynomial.
  Vec3 derivative(double t, int order) const;
  Vec3 position(double t) const { return derivative(t, 0); }
  Vec3 velocity(double t) const { return derivative(t, 1); }
  Vec3 acceleration(double t) const { return derivative(t, 2); }
  State state(double t) const;

  /// Same curve re-expanded about a new origin and restricted to [a, b].
  Segment restricted(double a, double b) const;

 private:
  double t0_;
  double t1_;
  std::array<std::vector<double>, 3> coeffs_;
};

/// Ordered, abutting polynomial segments. No speed constraint: this type also
/// represents trajectory perturbations.
class PiecewisePath {
 public:
  PiecewisePath() = default;
  explicit PiecewisePath(std::vector<Segment> segments);

  const std::vector<Segment>& segments() const { return segments_; }
  bool empty() const { return segments_.empty(); }
  double t_start() const;
  double t_end() const;

  /// Interior junction times (breaking points), in increasing order.
  std::vector<double> junctions() const;

  /// Index of the segment used for time t. At a junction the side decides.
  /// Throws DomainError when t is outside the domain (plus a tiny slack).
  std::size_t segment_index(double t, Side side = Side::Right) const;
  bool contains(double t) const;

  State state(double t, Side side = Side::Right) const;
  Vec3 position(double t) const;
  Vec3 derivative(double t, int order, Side side = Side::Right) const;

 private:
  std::vector<Segment> segments_;
};

/// Continuous piecewise-polynomial worldline of one charge.
class PiecewiseTrajectory {
 public:
  PiecewiseTrajectory() = default;
  PiecewiseTrajectory(PiecewisePath path, ParticleParams particle)
      : path_(std::move(path)), particle_(particle) {}
  PiecewiseTrajectory(std::vector<Segment> segments, ParticleParams particle)
      : path_(std::move(segments)), particle_(particle) {}

  const PiecewisePath& path() const { return path_; }
  const std::vector<Segment>& segments() const { return path_.segments(); }
  const ParticleParams& particle() const { return particle_; }
  double t_start() const { return path_.t_start(); }
  double t_end() const { return path_.t_end(); }
  std::vector<double> junctions() const { return path_.junctions(); }
  bool contains(double t) const { return path_.contains(t); }

 private:
  PiecewisePath path_;
  ParticleParams particle_;
};

/// Perturbations b(t) of a trajectory on the variable window.
using Perturbation = PiecewisePath;

struct TimeWindow {
  double start = 0.0;
  double end = 0.0;
  double length() const { return end - start; }
};

/// Boundary set of the two-particle boundary-value problem. Particle 1 varies
/// on `window1` and has a fixed history after it; particle 2 varies on
/// `window2` and has a fixed history before it. The histories cover the light
/// cones of the window endpoints.
struct BoundaryData {
  TimeWindow window1;
  TimeWindow window2;
  std::optional<PiecewiseTrajectory> history1;
  std::optional<PiecewiseTrajectory> history2;
  /// Additive constant of the particle-1 action (depends on trajectory 2 only).
  double k2 = 0.0;
  /// Additive constant of the particle-2 action.
  double k1 = 0.0;
};

struct ValidationReport {
  double max_speed = 0.0;
  /// |x(l, Left) - x(l, Right)| per junction.
  std::vector<double> continuity_defects;
  bool times_monotone = true;

  double max_continuity_defect() const;
  bool subluminal() const { return max_speed < 1.0; }
  bool ok(double continuity_tol = 1e-12) const;
};

// --- operations -----------------------------------------------------------

/// One-sided state; `side` only matters exactly at a breaking point.
State evaluate_state(const PiecewiseTrajectory& traj, double t, Side side = Side::Right);

using Vertex = std::pair<double, Vec3>;

/// Piecewise-constant-velocity trajectory through the vertices.
PiecewiseTrajectory polygonal_from_vertices(std::span<const Vertex> vertices,
                                            ParticleParams particle);

ValidationReport validate(const PiecewiseTrajectory& traj);
ValidationReport validate(const PiecewisePath& path);

/// Throws SuperluminalError / DomainError when `validate` finds a failure.
void require_valid(const PiecewiseTrajectory& traj, double continuity_tol = 1e-12);

// --- construction helpers -------------------------------------------------

Segment hermite_cubic(double t0, double t1, const Vec3& x0, const Vec3& v0, const Vec3& x1,
                      const Vec3& v1);
Segment hermite_quintic(double t0, double t1, const State& s0, const State& s1);

/// Piecewise Hermite interpolant of an exact motion sampled at `knots`;
/// degree 3 matches (x, v), degree 5 matches (x, v, a) at every knot.
PiecewiseTrajectory sample_motion(const std::function<State(double)>& motion,
                                  std::span<const double> knots, ParticleParams particle,
                                  int degree = 5);

/// Path restricted to [a, b]; segments are cut and re-expanded.
PiecewisePath restrict_path(const PiecewisePath& path, double a, double b);

/// Inserts a junction at t with the same polynomial on both sides.
PiecewisePath split_at(const PiecewisePath& path, double t);

/// `primary` extended by the parts of `fallback` lying before and after it.
/// Pieces that do not abut `primary` are dropped.
PiecewiseTrajectory splice(const PiecewiseTrajectory& primary, const PiecewiseTrajectory& fallback);

/// path + eps * pert on the domain of `path`; the perturbation is zero
/// outside its own domain.
PiecewisePath add_scaled(const PiecewisePath& path, const PiecewisePath& pert, double eps);

}  // namespace wfvar
