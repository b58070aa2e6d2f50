#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "wfvar/error.hpp"
#include "wfvar/lightcone.hpp"

using namespace wfvar;
using namespace wfvar::testing;

namespace {

double cone_residual(const ConeSolution& c, const Event& e, Branch b) {
  const double r = norm(e.x - c.x);
  return b == Branch::Retarded ? (e.t - c.t_k) - r : (c.t_k - e.t) - r;
}

}  // namespace

TEST_CASE("cone_time for a static charge") {
  const auto traj = at_rest({0, 0, 0}, -100, 100);
  const Event e{10.0, {5, 0, 0}};
  const auto ret = cone_time(traj, e, Branch::Retarded);
  CHECK(ret.t_k == doctest::Approx(5.0).epsilon(1e-13));
  CHECK(ret.r == doctest::Approx(5.0).epsilon(1e-13));
  CHECK(norm(ret.n_hat - Vec3{1, 0, 0}) < 1e-14);
  CHECK(ret.dilation == doctest::Approx(1.0));
  const auto adv = cone_time(traj, e, Branch::Advanced);
  CHECK(adv.t_k == doctest::Approx(15.0).epsilon(1e-13));
}

TEST_CASE("cone_time for uniform motion") {
  const auto traj = uniform({0, 0, 0}, {0.5, 0, 0}, -100, 100);
  const auto c = cone_time(traj, {0.0, {10, 0, 0}}, Branch::Retarded);
  CHECK(std::abs(c.t_k + 20.0) < 1e-11);
  CHECK(std::abs(c.r - 20.0) < 1e-11);
  CHECK(c.dilation == doctest::Approx(2.0).epsilon(1e-12));
  // Advanced: t_k = 10 - 0.5 t_k  ->  t_k = 20/3.
  const auto a = cone_time(traj, {0.0, {10, 0, 0}}, Branch::Advanced);
  CHECK(std::abs(a.t_k - 20.0 / 3.0) < 1e-11);
  CHECK(a.dilation == doctest::Approx(1.0 / 1.5).epsilon(1e-12));
}

TEST_CASE("cone_time reports missing history") {
  const auto traj = at_rest({0, 0, 0}, 0, 4);
  CHECK_THROWS_AS(cone_time(traj, {10.0, {5, 0, 0}}, Branch::Advanced), InsufficientHistoryError);
  CHECK_THROWS_AS(cone_time(traj, {3.0, {5, 0, 0}}, Branch::Retarded), InsufficientHistoryError);
  try {
    cone_time(traj, {3.0, {5, 0, 0}}, Branch::Retarded);
  } catch (const InsufficientHistoryError& e) {
    CHECK(std::string(e.what()).find("insufficient history") != std::string::npos);
  }
}

TEST_CASE("cone landing on a breaking point records the side") {
  const Vertex verts[] = {{-10.0, {0, 0, 0}}, {5.0, {0, 0, 0}}, {20.0, {0, 3, 0}}};
  const auto traj = polygonal_from_vertices(verts, kPositive);
  ConeOptions left;
  left.side = Side::Left;
  const auto cl = cone_time(traj, {10.0, {5, 0, 0}}, Branch::Retarded, left);
  const auto cr = cone_time(traj, {10.0, {5, 0, 0}}, Branch::Retarded);
  CHECK(cl.t_k == doctest::Approx(5.0));
  CHECK(cl.side == Side::Left);
  CHECK(cr.side == Side::Right);
  CHECK(norm(cl.v) == 0.0);
  CHECK(norm(cr.v - Vec3{0, 0.2, 0}) < 1e-15);
}

TEST_CASE("far_cone_time") {
  const Vec3 nx{1, 0, 0};
  CHECK(far_cone_time(at_rest({0, 0, 0}, -300, 300), 0.0, nx, 100.0) == doctest::Approx(-100.0));
  CHECK(far_cone_time(at_rest({3, 0, 0}, -300, 300), 0.0, nx, 100.0) == doctest::Approx(-97.0));
  const double tk = far_cone_time(uniform({0, 0, 0}, {0.5, 0, 0}, -300, 300), 0.0, nx, 100.0);
  CHECK(std::abs(tk + 200.0) < 1e-10);
  const double ta = far_cone_time(at_rest({3, 0, 0}, -300, 300), 0.0, nx, 100.0, Branch::Advanced);
  CHECK(ta == doctest::Approx(97.0));
}

TEST_CASE("influence_interval") {
  SUBCASE("static pair d=2") {
    const auto t1 = at_rest({0, 0, 0}, -50, 50);
    const auto t2 = at_rest({2, 0, 0}, -50, 50, kNegative);
    const auto [lo, hi] = influence_interval(t1, t2, 0.0);
    CHECK(lo == doctest::Approx(-2.0));
    CHECK(hi == doctest::Approx(2.0));
  }
  SUBCASE("static pair d=5") {
    const auto t1 = at_rest({0, 0, 0}, -50, 50);
    const auto t2 = at_rest({5, 0, 0}, -50, 50, kNegative);
    const auto [lo, hi] = influence_interval(t1, t2, 3.0);
    CHECK(lo == doctest::Approx(-2.0));
    CHECK(hi == doctest::Approx(8.0));
  }
  SUBCASE("co-moving pair perpendicular to motion") {
    const double d = 1.7;
    const auto t1 = uniform({0, 0, 0}, {0.6, 0, 0}, -50, 50);
    const auto t2 = uniform({0, d, 0}, {0.6, 0, 0}, -50, 50, kNegative);
    const auto [lo, hi] = influence_interval(t1, t2, 0.0);
    CHECK(hi - lo == doctest::Approx(2.5 * d).epsilon(1e-12));
    const Event e{0.0, t2.path().position(0.0)};
    CHECK(lo == doctest::Approx(cone_time(t1, e, Branch::Retarded).t_k));
    CHECK(hi == doctest::Approx(cone_time(t1, e, Branch::Advanced).t_k));
  }
}

// ---- properties --------------------------------------------------------

TEST_CASE("property: residual, dilation and method agreement on random trajectories") {
  Rng rng(314159);
  for (int trial = 0; trial < 60; ++trial) {
    const auto traj = random_polygon(rng, rng.ball(1.0), -40.0, 40, 0.9, 0.5, 3.0);
    const double tmid = 0.5 * (traj.t_start() + traj.t_end());
    for (int k = 0; k < 5; ++k) {
      const Event e{tmid + rng.uniform(-5, 5), rng.ball(8.0)};
      for (Branch b : {Branch::Retarded, Branch::Advanced}) {
        ConeSolution c;
        try {
          c = cone_time(traj, e, b);
        } catch (const InsufficientHistoryError&) {
          continue;
        }
        CHECK(std::abs(cone_residual(c, e, b)) < 1e-12 * std::max(1.0, std::abs(e.t)));
        CHECK(std::abs(norm(c.n_hat) - 1.0) < 1e-12);
        CHECK(c.dilation > 0.0);

        ConeOptions bis;
        bis.method = RootMethod::Bisection;
        CHECK(std::abs(cone_time(traj, e, b, bis).t_k - c.t_k) < 1e-10);

        // Skip events whose neighbourhood crosses a breaking point.
        const double h = 1e-5;
        const auto cp = cone_time(traj, {e.t + h, e.x}, b);
        const auto cm = cone_time(traj, {e.t - h, e.x}, b);
        if (traj.path().segment_index(cp.t_k) != traj.path().segment_index(cm.t_k)) continue;
        const double numeric = (cp.t_k - cm.t_k) / (2 * h);
        CHECK(std::abs(numeric - c.dilation) < 1e-6 * std::max(1.0, c.dilation));
      }
    }
  }
}

TEST_CASE("property: branch symmetry for time-symmetric motion") {
  // x(t) = x(-t): the advanced time of (t, x) is minus the retarded time of (-t, x).
  Rng rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const Vec3 c0 = rng.ball(1.0);
    const Vec3 c2 = rng.velocity(0.005);
    const double T = 40.0;
    // Coefficients in powers of s = t + T.
    auto coeffs = [&](double a, double b) { return std::vector<double>{a + b * T * T, -2 * b * T, b}; };
    const PiecewiseTrajectory traj(
        {Segment(-T, T, {coeffs(c0.x, c2.x), coeffs(c0.y, c2.y), coeffs(c0.z, c2.z)})}, kPositive);
    const Event e{rng.uniform(-3, 3), rng.ball(4.0)};
    const auto adv = cone_time(traj, e, Branch::Advanced);
    const auto ret = cone_time(traj, {-e.t, e.x}, Branch::Retarded);
    CHECK(std::abs(adv.t_k + ret.t_k) < 1e-11);
  }
}

TEST_CASE("property: far cone is the large-R limit of the exact cone") {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const auto traj = random_smooth(rng, rng.ball(1.0), -20, 20, 1, 0.7);
    const Vec3 n = rng.unit();
    const double R = 1e7;
    const double t = rng.uniform(-2, 2);
    const auto exact = cone_time(traj, {t + R, R * n}, Branch::Retarded);
    const double far = far_cone_time(traj, t + R, n, R);
    CHECK(std::abs(exact.t_k - far) < 1e-4);
  }
}
