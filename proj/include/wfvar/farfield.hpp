#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "wfvar/core.hpp"
#include "wfvar/lightcone.hpp"

namespace wfvar {

/// Far cone times closer than this to a breaking point give undefined fields.
inline constexpr double kGuardBand = 1e-9;

/// 1/R part of the electromagnetic field of one charge.
struct FarField {
  Vec3 E;
  Vec3 B;
  /// False when the cone time lies in the guard band of a breaking point.
  bool defined = true;
};

/// Lienard-Wiechert far field on the sphere of radius R in direction n at
/// observation time t. Retarded: E = (q/R) n x [(n - v) x a] / (1 - n.v)^3.
/// Advanced: the time reflection E = (q/R) n x [(n + v) x a] / (1 + n.v)^3.
/// Both branches use B = n x E.
FarField lw_far(const PiecewiseTrajectory& traj, double t, const Vec3& n, double R, Branch branch,
                double guard = kGuardBand);

/// B = -(q/R) n x d^2/dt^2 [x(t_k(t))], the second-derivative route to the
/// far magnetic field. Agrees with `lw_far(...).B`.
Vec3 b_via_second_derivative(const PiecewiseTrajectory& traj, double t, const Vec3& n, double R,
                             Branch branch);

struct FarFieldSample {
  double t = 0.0;
  Vec3 n;
  double R = 0.0;
  Vec3 E_ret, B_ret, E_adv, B_adv;
  /// Half-advanced plus half-retarded combination.
  Vec3 E, B;
  bool defined = true;
};

/// Fields of the pair summed over both charges, with
/// E = (E_adv + E_ret)/2 and B = (n x E_adv - n x E_ret)/2.
FarFieldSample wf_far(const PiecewiseTrajectory& traj1, const PiecewiseTrajectory& traj2, double t,
                      const Vec3& n, double R, double guard = kGuardBand);

/// -sum_k q_k n x d^2/dt^2 [x_k(t_k(t))] over the retarded far cones, with the
/// 1/R amplitude factored out. t is the observation time on the sphere of
/// radius R (R = 0 makes t the reduced time t_obs - R). Empty inside a
/// guard band.
std::optional<Vec3> gah_residual(const PiecewiseTrajectory& traj1, const PiecewiseTrajectory& traj2,
                                 double t, const Vec3& n, double R = 0.0,
                                 double guard = kGuardBand);

/// Radial component (|E_adv|^2 - |E_ret|^2) / 4 of the generalized Poynting
/// vector.
double poynting_flux(const Vec3& E_adv, const Vec3& E_ret);

/// Direction set with weights summing to 4 pi.
struct SphereMesh {
  std::vector<Vec3> directions;
  std::vector<double> weights;
};

/// Gauss-Legendre nodes in cos(theta) times uniform nodes in phi.
SphereMesh sphere_mesh(int n_theta = 16, int n_phi = 32);

enum class FieldMode {
  /// Generalized flux of the half-advanced, half-retarded fields.
  TimeSymmetric,
  /// Ordinary outgoing flux of the retarded fields alone.
  RetardedOnly,
};

/// (1/4 pi) times the integral of the flux times R^2 over the sphere, skipping
/// undefined samples and renormalizing by the covered solid angle. For
/// RetardedOnly the flux density is -|E_ret|^2, so a slow charge radiating by
/// the Larmor formula gives -(2/3) q^2 a^2. Throws CoverageError when more than
/// 10% of the samples are undefined.
double sphere_flux(std::span<const PiecewiseTrajectory> charges, double t, double R,
                   const SphereMesh& mesh, FieldMode mode = FieldMode::TimeSymmetric,
                   double guard = kGuardBand);

double sphere_flux(const PiecewiseTrajectory& traj1, const PiecewiseTrajectory& traj2, double t,
                   double R, const SphereMesh& mesh, FieldMode mode = FieldMode::TimeSymmetric,
                   double guard = kGuardBand);

/// Samples of `wf_far` on every (t, n) pair, times outermost.
std::vector<FarFieldSample> field_map(const PiecewiseTrajectory& traj1,
                                      const PiecewiseTrajectory& traj2, std::span<const double> times,
                                      std::span<const Vec3> directions, double R);

/// CSV with header t,nx,ny,nz,Ex,Ey,Ez,Bx,By,Bz,defined.
void write_field_csv(std::ostream& os, std::span<const FarFieldSample> samples);

}  // namespace wfvar
