#pragma once

#include <array>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "wfvar/core.hpp"
#include "wfvar/error.hpp"
#include "wfvar/lightcone.hpp"

namespace wfvar {

/// 1/(1 - n.v1) - 1/(1 - n.v2): difference of the far-field time dilations.
double k12(const Vec3& v1, const Vec3& v2, const Vec3& n);

/// v1/(1 - n.v1) - v2/(1 - n.v2): rate of change of x1(t1) - x2(t2) along the
/// reduced far-field time t.
Vec3 separation_rate(const Vec3& v1, const Vec3& v2, const Vec3& n);

/// Family data of the interval holding (t, n): the interval edge t_sigma and
/// the transverse vectors D(n), L(n).
struct FamilyPiece {
  double t_edge = 0.0;
  Vec3 D;
  Vec3 L;
};

/// Piecewise-linear family of separations with vanishing far field. The
/// required separation x1(t1) - x2(t2) seen along n at reduced time t is
/// D(n) + (t1 - t2) n - (t - t_sigma) n x L(n).
class SeparationFamily {
 public:
  virtual ~SeparationFamily() = default;
  /// Throws DomainError when t lies outside every interval.
  virtual FamilyPiece piece(double t, const Vec3& n) const = 0;
  /// True when D and L are constant inside every interval, so the
  /// constructed partner is polygonal.
  virtual bool piecewise_linear() const { return true; }
};

Vec3 separation_family(const SeparationFamily& family, double t, const Vec3& n, double dt12);

// --- real spherical harmonics ------------------------------------------------

/// Number of real spherical harmonics with degree <= lmax.
constexpr std::size_t sh_count(int lmax) { return static_cast<std::size_t>((lmax + 1) * (lmax + 1)); }

/// Orthonormal real spherical harmonics Y_lm(n) for l <= lmax, ordered by
/// index l*l + l + m.
std::vector<double> real_sh(int lmax, const Vec3& n);

/// Vector-valued function on the sphere stored as real SH coefficients per
/// Cartesian component.
struct ShVectorField {
  std::array<std::vector<double>, 3> coeffs;

  Vec3 operator()(const Vec3& n) const;
  int lmax() const;
  /// Coefficients of the constant field v.
  static ShVectorField constant(const Vec3& v);
};

/// Family stored as SH tables per interval. D and L are projected
/// transverse to n after evaluation. With `continuous` set, D of every
/// interval after the first is taken from the end state of the previous one,
/// D_{s+1}(n) = D_s(n) - (t_{s+1} - t_s) n x L_s(n), and its own table is
/// ignored. With `project` cleared the tables must already be transverse;
/// this is checked on a fixed direction set at construction.
class SeparationFamilyParams final : public SeparationFamily {
 public:
  struct Interval {
    double t_edge = 0.0;
    ShVectorField D;
    ShVectorField L;
  };

  SeparationFamilyParams(std::vector<Interval> intervals, double t_final, bool continuous = true,
                         bool project = true);

  FamilyPiece piece(double t, const Vec3& n) const override;

  const std::vector<Interval>& intervals() const { return intervals_; }
  double t_final() const { return t_final_; }
  bool continuous() const { return continuous_; }
  bool project() const { return project_; }

 private:
  std::vector<Interval> intervals_;
  double t_final_;
  bool continuous_;
  bool project_;
};

/// Family given by callables. D and L must already be transverse; this is
/// checked on a fixed direction set at construction and on every call.
class FunctionFamily final : public SeparationFamily {
 public:
  using Field = std::function<Vec3(std::size_t interval, const Vec3& n)>;

  /// Interval s is [edges[s], edges[s+1]).
  FunctionFamily(std::vector<double> edges, Field D, Field L, bool piecewise_linear = true);

  FamilyPiece piece(double t, const Vec3& n) const override;
  bool piecewise_linear() const override { return linear_; }

 private:
  std::vector<double> edges_;
  Field D_;
  Field L_;
  bool linear_;
};

/// Family read off a reference polygonal pair: L(n) = n x w(n) with w the
/// separation rate of the two chord velocities seen along n, the interval
/// edges are the far-field images l - n.x_k(l) of the vertices, and D is the
/// transverse separation at the interval edge.
class PolygonalPairFamily final : public SeparationFamily {
 public:
  PolygonalPairFamily(PiecewiseTrajectory traj1, PiecewiseTrajectory traj2);

  FamilyPiece piece(double t, const Vec3& n) const override;

 private:
  PiecewiseTrajectory traj1_;
  PiecewiseTrajectory traj2_;
};

// --- rigidity ------------------------------------------------------------------

struct RigidityReport {
  /// max over n of |w(n) - K12(n) n| with the best-fit K12(n) = n.w(n).
  double max_violation = 0.0;
  std::vector<double> violations;
  std::vector<double> k12_fit;
};

/// Tests whether v1, v2 admit a constant-separation (L = 0) family member
/// over every sampled direction. Requires three non-coplanar samples.
RigidityReport rigidity_check(const Vec3& v1, const Vec3& v2, std::span<const Vec3> n_samples);

/// `count` unit vectors on the cone of half-angle `half_angle` around `axis`.
std::vector<Vec3> cone_directions(const Vec3& axis, double half_angle, int count);

// --- sewing chains ---------------------------------------------------------------

enum class ChainDirection { Forward, Backward };

struct ChainLink {
  int particle = 1;
  double t = 0.0;
};

struct SewingChain {
  /// Links after the seed, alternating particles.
  std::vector<ChainLink> links;
  ChainDirection direction = ChainDirection::Forward;
  /// True when a cone left a trajectory domain before `count` links.
  bool truncated = false;
};

/// Iterates the advanced (forward) or retarded (backward) light-cone map from
/// the seed, alternating particles.
SewingChain sewing_chain(const PiecewiseTrajectory& traj1, const PiecewiseTrajectory& traj2,
                         ChainLink seed, ChainDirection direction, int count);

// --- partner construction ---------------------------------------------------------

enum class PartnerFit { Auto, Polygonal, Cubic };

struct PartnerOptions {
  /// Largest accepted spread of the per-direction candidates.
  double tolerance = 1e-6;
  PartnerFit fit = PartnerFit::Auto;
  int max_iter = 60;
};

struct ConsistencyReport {
  /// max over t1 of the spread.
  double max_spread = 0.0;
  std::vector<double> t1;
  /// max_n |x1(t1, n) - mean_n x1(t1, .)| per t1.
  std::vector<double> spread;
  std::vector<Vec3> mean;
};

/// The family does not determine a single partner trajectory.
class InconsistentParamsError : public Error {
 public:
  InconsistentParamsError(const std::string& what, ConsistencyReport report)
      : Error(what), report_(std::move(report)) {}
  const ConsistencyReport& report() const { return report_; }

 private:
  ConsistencyReport report_;
};

struct PartnerResult {
  PiecewiseTrajectory traj1;
  ConsistencyReport report;
};

/// Builds the trajectory of particle 1 whose separation from `traj2` follows
/// `family` in every direction of `n_grid`, at the times `t1_grid`. For each
/// t1 and n the candidate x1(t1, n) solves n.x1 = t1 - t, t2 = t + n.x2(t2)
/// and x1 - x2(t2) = family separation; the consensus position minimizes the
/// transverse mismatch over all directions. Throws InconsistentParamsError
/// when the spread exceeds the tolerance and ConvergenceError when the
/// consensus solve fails.
PartnerResult construct_partner(const PiecewiseTrajectory& traj2, const SeparationFamily& family,
                                std::span<const Vec3> n_grid, std::span<const double> t1_grid,
                                ParticleParams particle1, const PartnerOptions& opts = {});

}  // namespace wfvar
