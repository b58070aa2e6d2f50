#include <doctest.h>

#include <cmath>
#include <numbers>

#include "fixtures.hpp"
#include "wfvar/error.hpp"
#include "wfvar/farfield.hpp"
#include "wfvar/lightcone.hpp"
#include "wfvar/shortrange.hpp"

using namespace wfvar;
using namespace wfvar::testing;

namespace {

std::vector<Vec3> mesh_directions(int n_theta, int n_phi) { return sphere_mesh(n_theta, n_phi).directions; }

std::vector<double> grid(double a, double b, int count) {
  std::vector<double> out;
  for (int i = 0; i < count; ++i) out.push_back(a + (b - a) * i / (count - 1));
  return out;
}

FunctionFamily::Field constant_field(const Vec3& v) {
  return [v](std::size_t, const Vec3& n) { return transverse(v, n); };
}

}  // namespace

TEST_CASE("k12") {
  const Vec3 n{1, 0, 0};
  CHECK(k12({0.2, 0.1, 0}, {0.2, 0.1, 0}, n) == 0.0);
  CHECK(k12({0, 0, 0}, {0.5, 0.3, 0}, n) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(k12({-0.5, 0, 0}, {0, 0, 0}, n) == doctest::Approx(-1.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("separation_family") {
  const Vec3 n{1, 0, 0};
  SUBCASE("static member") {
    const FunctionFamily fam({0.0, 10.0}, constant_field({0, 2, 0}), constant_field({}));
    CHECK(norm(separation_family(fam, 3.0, n, 0.0) - Vec3{0, 2, 0}) == 0.0);
  }
  SUBCASE("at the interval edge") {
    const FunctionFamily fam({1.0, 10.0}, constant_field({0, 2, 1}), constant_field({0, 0.3, -0.1}));
    CHECK(norm(separation_family(fam, 1.0, n, 0.7) - Vec3{0.7, 2, 1}) < 1e-15);
  }
  SUBCASE("hand evaluation") {
    const FunctionFamily fam({1.0, 10.0}, constant_field({0, 2, 1}), constant_field({0, 0.3, -0.1}));
    // n x L = (0, 0.1, 0.3), elapsed 2.5.
    const Vec3 expect{0.4, 2 - 0.25, 1 - 0.75};
    CHECK(norm(separation_family(fam, 3.5, n, 0.4) - expect) < 1e-15);
  }
  SUBCASE("outside the intervals") {
    const FunctionFamily fam({0.0, 10.0}, constant_field({0, 2, 0}), constant_field({}));
    CHECK_THROWS_AS(separation_family(fam, 10.5, n, 0.0), DomainError);
    CHECK_THROWS_AS(separation_family(fam, -0.5, n, 0.0), DomainError);
  }
  SUBCASE("longitudinal L is rejected") {
    auto bad = [](std::size_t, const Vec3& n) { return transverse({0, 1, 0}, n) + 1e-6 * n; };
    CHECK_THROWS_AS(FunctionFamily({0.0, 1.0}, constant_field({}), bad), ContractError);
  }
}

TEST_CASE("spherical harmonic tables") {
  const double c = std::sqrt(3.0 / (4.0 * std::numbers::pi));
  const Vec3 n = normalized(Vec3{0.3, -0.5, 0.8});
  const auto y = real_sh(1, n);
  REQUIRE(y.size() == 4);
  CHECK(y[0] == doctest::Approx(0.5 / std::sqrt(std::numbers::pi)).epsilon(1e-15));
  CHECK(y[1] == doctest::Approx(c * n.y).epsilon(1e-14));
  CHECK(y[2] == doctest::Approx(c * n.z).epsilon(1e-14));
  CHECK(y[3] == doctest::Approx(c * n.x).epsilon(1e-14));
  CHECK(norm(ShVectorField::constant({1, -2, 3})(n) - Vec3{1, -2, 3}) < 1e-14);

  SUBCASE("continuity chain across interval edges") {
    using I = SeparationFamilyParams::Interval;
    const Vec3 d{0, 0, 1}, l1{0, 0.2, 0};
    const SeparationFamilyParams fam({I{0.0, ShVectorField::constant(d), ShVectorField::constant(l1)},
                                      I{2.0, ShVectorField::constant({5, 5, 5}), ShVectorField::constant({})}},
                                     4.0);
    const Vec3 m{1, 0, 0};
    const FamilyPiece p = fam.piece(3.0, m);
    CHECK(p.t_edge == 2.0);
    CHECK(norm(p.L) == 0.0);
    // D_2 = D_1 - 2 n x L_1 = (0, 0, 1) - 2 (0, 0, 0.2).
    CHECK(norm(p.D - Vec3{0, 0, 0.6}) < 1e-14);
    CHECK(norm(separation_family(fam, 4.0, m, 0.0) - separation_family(fam, 2.0, m, 0.0)) < 1e-14);
  }
  SUBCASE("strict tables reject longitudinal parts") {
    using I = SeparationFamilyParams::Interval;
    const std::vector<I> iv{I{0.0, ShVectorField::constant({}), ShVectorField::constant({0, 0, 1})}};
    CHECK_NOTHROW(SeparationFamilyParams(iv, 1.0));
    CHECK_THROWS_AS(SeparationFamilyParams(iv, 1.0, true, false), ContractError);
  }
  SUBCASE("bad tables") {
    using I = SeparationFamilyParams::Interval;
    ShVectorField three{{std::vector<double>{1, 0, 0}, {}, {}}};
    CHECK_THROWS_AS(SeparationFamilyParams({I{0.0, three, {}}}, 1.0), ConfigError);
    CHECK_THROWS_AS(SeparationFamilyParams({I{0.0, {}, {}}}, 0.0), ConfigError);
  }
}

TEST_CASE("rigidity_check") {
  const auto dirs = cone_directions({0, 0, 1}, 0.6, 8);
  CHECK(rigidity_check({0.3, 0, 0}, {0.3, 0, 0}, dirs).max_violation == 0.0);
  CHECK(rigidity_check({0, 0, 0}, {0, 0, 0}, dirs).max_violation == 0.0);
  const auto r = rigidity_check({0.3, 0, 0}, {0, 0.3, 0}, dirs);
  CHECK(r.max_violation > 0.05);
  CHECK(r.violations.size() == 8);
  const std::vector<Vec3> planar{{1, 0, 0}, {0, 1, 0}, normalized(Vec3{1, 1, 0})};
  CHECK_THROWS_AS(rigidity_check({0.1, 0, 0}, {0, 0, 0}, planar), InsufficientSamplingError);
  CHECK_THROWS_AS(rigidity_check({0.1, 0, 0}, {0, 0, 0}, std::span(dirs).first(2)), InsufficientSamplingError);
}

TEST_CASE("sewing_chain") {
  const auto p1 = at_rest({0, 0, 0}, -10, 7);
  const auto p2 = at_rest({2, 0, 0}, -10, 7);
  SUBCASE("forward") {
    const auto chain = sewing_chain(p1, p2, {2, 0.0}, ChainDirection::Forward, 3);
    REQUIRE(chain.links.size() == 3);
    CHECK_FALSE(chain.truncated);
    const int particles[] = {1, 2, 1};
    const double times[] = {2, 4, 6};
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(chain.links[i].particle == particles[i]);
      CHECK(chain.links[i].t == doctest::Approx(times[i]).epsilon(1e-13));
    }
  }
  SUBCASE("empty") { CHECK(sewing_chain(p1, p2, {2, 0.0}, ChainDirection::Forward, 0).links.empty()); }
  SUBCASE("backward") {
    const auto chain = sewing_chain(p1, p2, {2, 0.0}, ChainDirection::Backward, 2);
    REQUIRE(chain.links.size() == 2);
    CHECK(chain.links[0].t == doctest::Approx(-2).epsilon(1e-13));
    CHECK(chain.links[1].t == doctest::Approx(-4).epsilon(1e-13));
    CHECK(chain.links[0].particle == 1);
    CHECK(chain.links[1].particle == 2);
  }
  SUBCASE("truncated") {
    const auto chain = sewing_chain(p1, p2, {2, 0.0}, ChainDirection::Forward, 5);
    CHECK(chain.truncated);
    CHECK(chain.links.size() == 3);
  }
}

TEST_CASE("construct_partner") {
  const auto dirs = mesh_directions(4, 6);
  SUBCASE("static fixed point") {
    const auto p2 = at_rest({0, 0, 0}, -50, 50, kNegative);
    const Vec3 d{0, 1.5, 0};
    using I = SeparationFamilyParams::Interval;
    const SeparationFamilyParams fam({I{-40.0, ShVectorField::constant(d), ShVectorField::constant({})}}, 40.0);
    const auto t1 = grid(-10, 10, 5);
    const auto res = construct_partner(p2, fam, dirs, t1, kPositive);
    CHECK(res.report.max_spread < 1e-12);
    for (double t : grid(-10, 10, 11)) CHECK(norm(res.traj1.path().position(t) - d) < 1e-12);
    CHECK(res.traj1.segments().size() == 1);
  }
  SUBCASE("uniform partner from an analytic family") {
    const Vec3 v1{0.2, -0.1, 0.3}, v2{-0.3, 0.1, 0.0}, d{0.5, 2.0, -1.0};
    const auto p2 = uniform({0, 0, 0}, v2, -60, 60, kNegative);
    // Separation along n is P_n d + (n.d) P_n v1/(1 - n.v1) + t P_n w; the family
    // measures elapsed time from the edge at -40.
    auto D = [&](std::size_t, const Vec3& n) {
      return transverse(d, n) + dot(n, d) * transverse(v1, n) / (1.0 - dot(n, v1)) -
             40.0 * transverse(separation_rate(v1, v2, n), n);
    };
    auto L = [&](std::size_t, const Vec3& n) { return cross(n, separation_rate(v1, v2, n)); };
    const FunctionFamily fam({-40.0, 40.0}, D, L);
    const auto t1 = grid(-10, 10, 6);
    const auto res = construct_partner(p2, fam, dirs, t1, kPositive);
    CHECK(res.report.max_spread < 1e-10);
    for (double t : grid(-10, 10, 9)) CHECK(norm(res.traj1.path().position(t) - (d + t * v1)) < 1e-10);
  }
  SUBCASE("inconsistent family") {
    const auto p2 = at_rest({0, 0, 0}, -50, 50, kNegative);
    auto D = [](std::size_t, const Vec3& n) { return transverse({0, 1, 0}, n) * (1.0 + 0.5 * n.x); };
    const FunctionFamily fam({-40.0, 40.0}, D, constant_field({}));
    const auto t1 = grid(-5, 5, 3);
    try {
      construct_partner(p2, fam, dirs, t1, kPositive);
      FAIL("expected an inconsistency");
    } catch (const InconsistentParamsError& e) {
      CHECK(e.report().max_spread > 1e-3);
      CHECK(e.report().spread.size() == 3);
    }
  }
  SUBCASE("coplanar directions") {
    const auto p2 = at_rest({0, 0, 0}, -50, 50);
    const FunctionFamily fam({-40.0, 40.0}, constant_field({0, 1, 0}), constant_field({}));
    const std::vector<Vec3> planar{{1, 0, 0}, {0, 1, 0}, normalized(Vec3{1, 1, 0})};
    const double t1[] = {0.0, 1.0};
    CHECK_THROWS_AS(construct_partner(p2, fam, planar, t1, kPositive), InsufficientSamplingError);
  }
}

TEST_CASE("polygonal round trip") {
  Rng rng(7101);
  const auto ref1 = random_polygon(rng, {0, 0, 0}, -100.0, 120, 0.5, 1.0, 3.0, kPositive);
  const auto p2 = random_polygon(rng, {4, 0, 0}, -100.0, 120, 0.5, 1.0, 3.0, kNegative);
  const PolygonalPairFamily fam(ref1, p2);
  std::vector<double> t1{-20.0};
  for (double j : ref1.junctions()) {
    if (j > -20.0 && j < 20.0) t1.push_back(j);
  }
  t1.push_back(20.0);
  const auto res = construct_partner(p2, fam, mesh_directions(4, 6), t1, kPositive);
  CHECK(res.report.max_spread < 1e-6);
  for (double t : grid(-20, 20, 41)) CHECK(norm(res.traj1.path().position(t) - ref1.path().position(t)) < 1e-8);

  double worst = 0.0;
  for (double t : grid(-5, 5, 21)) {
    for (int k = 0; k < 10; ++k) {
      if (const auto r = gah_residual(res.traj1, p2, t, rng.unit())) worst = std::max(worst, norm(*r));
    }
  }
  CHECK(worst < 1e-8);
  CHECK(std::abs(sphere_flux(res.traj1, p2, 0.0, 10.0, sphere_mesh())) < 1e-8);
}

TEST_CASE("property: real harmonics are orthonormal") {
  const SphereMesh mesh = sphere_mesh();
  const int lmax = 4;
  const std::size_t m = sh_count(lmax);
  std::vector<double> gram(m * m, 0.0);
  for (std::size_t k = 0; k < mesh.directions.size(); ++k) {
    const auto y = real_sh(lmax, mesh.directions[k]);
    for (std::size_t i = 0; i < m; ++i) {
      for (std::size_t j = 0; j < m; ++j) gram[i * m + j] += mesh.weights[k] * y[i] * y[j];
    }
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) worst = std::max(worst, std::abs(gram[i * m + j] - (i == j ? 1.0 : 0.0)));
  }
  CHECK(worst < 1e-12);
}

TEST_CASE("property: rigidity separates distinct velocities") {
  Rng rng(7102);
  for (int trial = 0; trial < 100; ++trial) {
    const Vec3 v1 = rng.velocity(0.9);
    const Vec3 v2 = rng.velocity(0.9);
    const auto dirs = cone_directions(rng.unit(), rng.uniform(0.3, 1.2), rng.integer(6, 12));
    CHECK(rigidity_check(v1, v2, dirs).max_violation > 1e-3 * norm(v1 - v2));
    CHECK(rigidity_check(v1, v1, dirs).max_violation < 1e-12);
  }
}

TEST_CASE("property: sewing chain links lie on light cones") {
  Rng rng(7103);
  for (int trial = 0; trial < 20; ++trial) {
    const auto a = random_polygon(rng, {0, 0, 0}, -60.0, 80, 0.7, 1.0, 3.0);
    const auto b = random_polygon(rng, rng.ball(3.0) + Vec3{5, 0, 0}, -60.0, 80, 0.7, 1.0, 3.0);
    const auto dir = trial % 2 == 0 ? ChainDirection::Forward : ChainDirection::Backward;
    const ChainLink seed{rng.integer(1, 2), rng.uniform(-10.0, 10.0)};
    const auto chain = sewing_chain(a, b, seed, dir, 6);
    ChainLink prev = seed;
    for (const auto& link : chain.links) {
      CHECK(link.particle == 3 - prev.particle);
      const auto& pa = prev.particle == 1 ? a : b;
      const auto& pb = link.particle == 1 ? a : b;
      const double gap = std::abs(link.t - prev.t) - norm(pa.path().position(prev.t) - pb.path().position(link.t));
      CHECK(std::abs(gap) < 1e-10);
      CHECK((dir == ChainDirection::Forward ? link.t > prev.t : link.t < prev.t));
      prev = link;
    }
  }
}
