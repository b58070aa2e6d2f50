// Shared builders and random generators for the test suites.
#pragma once

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "wfvar/core.hpp"

namespace wfvar::testing {

inline constexpr ParticleParams kPositive{1.0, 1.0};
inline constexpr ParticleParams kNegative{1.0, -1.0};

/// Charge resting at `x` on [t0, t1].
inline PiecewiseTrajectory at_rest(const Vec3& x, double t0, double t1,
                                   ParticleParams p = kPositive) {
  return PiecewiseTrajectory(
      {Segment(t0, t1, {std::vector<double>{x.x}, std::vector<double>{x.y}, std::vector<double>{x.z}})}, p);
}

/// x(t) = x0 + v t on [t0, t1].
inline PiecewiseTrajectory uniform(const Vec3& x0, const Vec3& v, double t0, double t1,
                                   ParticleParams p = kPositive) {
  const Vec3 xs = x0 + t0 * v;
  return PiecewiseTrajectory(
      {Segment(t0, t1, {std::vector<double>{xs.x, v.x}, std::vector<double>{xs.y, v.y},
                        std::vector<double>{xs.z, v.z}})},
      p);
}

/// Circular motion of radius rho, angular frequency omega, phase phi, in the
/// xy plane, sampled by quintic Hermite segments.
inline PiecewiseTrajectory circular(double rho, double omega, double phase, double t0, double t1,
                                    int segments, ParticleParams p = kPositive) {
  std::vector<double> knots;
  for (int i = 0; i <= segments; ++i) knots.push_back(t0 + (t1 - t0) * i / segments);
  auto motion = [=](double t) {
    const double th = omega * t + phase;
    const double c = std::cos(th), s = std::sin(th);
    return State{{rho * c, rho * s, 0.0},
                 {-rho * omega * s, rho * omega * c, 0.0},
                 {-rho * omega * omega * c, -rho * omega * omega * s, 0.0}};
  };
  return sample_motion(motion, knots, p, 5);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(gen_); }

  Vec3 unit() {
    const double z = uniform(-1.0, 1.0);
    const double phi = uniform(0.0, 2.0 * std::numbers::pi);
    const double s = std::sqrt(1.0 - z * z);
    return {s * std::cos(phi), s * std::sin(phi), z};
  }

  /// Uniform in the ball of the given radius.
  Vec3 ball(double radius) { return unit() * (radius * std::cbrt(uniform(0.0, 1.0))); }

  /// Random velocity with speed at most vmax.
  Vec3 velocity(double vmax) { return unit() * uniform(0.0, vmax); }

  std::mt19937_64& engine() { return gen_; }

 private:
  std::mt19937_64 gen_;
};

/// Random polygonal trajectory with `count` vertices starting at t0, with
/// chord speeds at most vmax and durations in [dt_lo, dt_hi].
inline PiecewiseTrajectory random_polygon(Rng& rng, const Vec3& start, double t0, int count,
                                          double vmax, double dt_lo, double dt_hi,
                                          ParticleParams p = kPositive) {
  std::vector<Vertex> verts{{t0, start}};
  for (int i = 1; i < count; ++i) {
    const double dt = rng.uniform(dt_lo, dt_hi);
    verts.emplace_back(verts.back().first + dt, verts.back().second + dt * rng.velocity(vmax));
  }
  return polygonal_from_vertices(verts, p);
}

/// Random smooth trajectory: one polynomial of the given degree with small
/// coefficients about a base point, on [t0, t1].
inline PiecewiseTrajectory random_smooth(Rng& rng, const Vec3& base, double t0, double t1,
                                         int degree, double vmax, ParticleParams p = kPositive) {
  const double span = t1 - t0;
  for (;;) {
    std::array<std::vector<double>, 3> c;
    for (int k = 0; k < 3; ++k) {
      c[static_cast<std::size_t>(k)].push_back(base[k]);
      for (int j = 1; j <= degree; ++j) {
        c[static_cast<std::size_t>(k)].push_back(rng.uniform(-1.0, 1.0) * vmax /
                                                 (std::sqrt(3.0) * degree * j * std::pow(span, j - 1)));
      }
    }
    PiecewiseTrajectory traj({Segment(t0, t1, c)}, p);
    if (validate(traj).max_speed < vmax) return traj;
  }
}

}  // namespace wfvar::testing
