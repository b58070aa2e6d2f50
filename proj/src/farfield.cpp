#include "wfvar/farfield.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <sstream>

#include "wfvar/error.hpp"
#include "wfvar/parallel.hpp"
#include "wfvar/quadrature.hpp"

namespace wfvar {

namespace {

double branch_sign(Branch b) { return b == Branch::Retarded ? 1.0 : -1.0; }

bool in_guard_band(const PiecewisePath& path, double t_k, double guard) {
  for (double l : path.junctions()) {
    if (std::abs(t_k - l) < guard) return true;
  }
  return false;
}

void check_sphere(const Vec3& n, double R) {
  if (!(R > 0.0)) throw DomainError("far-field radius must be positive");
  if (std::abs(norm(n) - 1.0) > 1e-12) throw DomainError("far-field direction must be a unit vector");
}

// d^2/dt^2 x(t_k(t)) along the far cone.
Vec3 cone_acceleration(const FarCone& c, const Vec3& n, double sign) {
  const double g = c.dilation;
  return g * g * c.state.a + sign * g * g * g * dot(n, c.state.a) * c.state.v;
}

}  // namespace

FarField lw_far(const PiecewiseTrajectory& traj, double t, const Vec3& n, double R, Branch branch,
                double guard) {
  check_sphere(n, R);
  const FarCone c = far_cone(traj.path(), t, n, R, branch);
  const double s = branch_sign(branch);
  const double q = traj.particle().charge;
  const Vec3& v = c.state.v;
  const Vec3& a = c.state.a;
  const double k = 1.0 - s * dot(n, v);
  FarField out;
  out.E = (q / (R * k * k * k)) * cross(n, cross(n - s * v, a));
  out.B = cross(n, out.E);
  out.defined = !in_guard_band(traj.path(), c.t_k, guard);
  return out;
}

Vec3 b_via_second_derivative(const PiecewiseTrajectory& traj, double t, const Vec3& n, double R,
                             Branch branch) {
  check_sphere(n, R);
  const FarCone c = far_cone(traj.path(), t, n, R, branch);
  const Vec3 acc = cone_acceleration(c, n, branch_sign(branch));
  return (-traj.particle().charge / R) * cross(n, acc);
}

FarFieldSample wf_far(const PiecewiseTrajectory& traj1, const PiecewiseTrajectory& traj2, double t,
                      const Vec3& n, double R, double guard) {
  FarFieldSample out;
  out.t = t;
  out.n = n;
  out.R = R;
  for (const PiecewiseTrajectory* tr : {&traj1, &traj2}) {
    const FarField ret = lw_far(*tr, t, n, R, Branch::Retarded, guard);
    const FarField adv = lw_far(*tr, t, n, R, Branch::Advanced, guard);
    out.E_ret += ret.E;
    out.B_ret += ret.B;
    out.E_adv += adv.E;
    out.B_adv += adv.B;
    out.defined = out.defined && ret.defined && adv.defined;
  }
  out.E = 0.5 * out.E_adv + 0.5 * out.E_ret;
  out.B = 0.5 * cross(n, out.E_adv) - 0.5 * cross(n, out.E_ret);
  return out;
}

std::optional<Vec3> gah_residual(const PiecewiseTrajectory& traj1, const PiecewiseTrajectory& traj2,
                                 double t, const Vec3& n, double R, double guard) {
  if (std::abs(norm(n) - 1.0) > 1e-12) throw DomainError("far-field direction must be a unit vector");
  Vec3 sum;
  for (const PiecewiseTrajectory* tr : {&traj1, &traj2}) {
    const FarCone c = far_cone(tr->path(), t, n, R, Branch::Retarded);
    if (in_guard_band(tr->path(), c.t_k, guard)) return std::nullopt;
    sum += tr->particle().charge * cone_acceleration(c, n, 1.0);
  }
  return -cross(n, sum);
}

double poynting_flux(const Vec3& E_adv, const Vec3& E_ret) {
  return 0.25 * (norm2(E_adv) - norm2(E_ret));
}

SphereMesh sphere_mesh(int n_theta, int n_phi) {
  if (n_theta < 1 || n_phi < 1) throw ConfigError("sphere mesh needs positive node counts");
  const GaussRule& rule = gauss_legendre(n_theta);
  SphereMesh mesh;
  const double dphi = 2.0 * std::numbers::pi / n_phi;
  for (int i = 0; i < n_theta; ++i) {
    const double z = rule.nodes[static_cast<std::size_t>(i)];
    const double rxy = std::sqrt(std::max(0.0, 1.0 - z * z));
    for (int j = 0; j < n_phi; ++j) {
      const double phi = (j + 0.5) * dphi;
      mesh.directions.push_back({rxy * std::cos(phi), rxy * std::sin(phi), z});
      mesh.weights.push_back(rule.weights[static_cast<std::size_t>(i)] * dphi);
    }
  }
  return mesh;
}

double sphere_flux(std::span<const PiecewiseTrajectory> charges, double t, double R,
                   const SphereMesh& mesh, FieldMode mode, double guard) {
  const std::size_t m = mesh.directions.size();
  if (m == 0 || mesh.weights.size() != m) throw ConfigError("sphere mesh is empty or inconsistent");
  std::vector<double> flux(m, 0.0);
  std::vector<char> defined(m, 1);
  parallel_for(m, [&](std::size_t i) {
    const Vec3& n = mesh.directions[i];
    Vec3 e_ret, e_adv;
    bool ok = true;
    for (const auto& tr : charges) {
      const FarField ret = lw_far(tr, t, n, R, Branch::Retarded, guard);
      e_ret += ret.E;
      ok = ok && ret.defined;
      if (mode == FieldMode::TimeSymmetric) {
        const FarField adv = lw_far(tr, t, n, R, Branch::Advanced, guard);
        e_adv += adv.E;
        ok = ok && adv.defined;
      }
    }
    defined[i] = ok;
    flux[i] = mode == FieldMode::TimeSymmetric ? poynting_flux(e_adv, e_ret) : poynting_flux({}, 2.0 * e_ret);
  });
  double total = 0.0;
  double covered = 0.0;
  std::size_t missing = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!defined[i]) {
      ++missing;
      continue;
    }
    total += mesh.weights[i] * flux[i];
    covered += mesh.weights[i];
  }
  if (missing * 10 > m) {
    std::ostringstream os;
    os << missing << " of " << m << " sphere samples are undefined at t=" << t;
    throw CoverageError(os.str());
  }
  return total * R * R / covered;
}

double sphere_flux(const PiecewiseTrajectory& traj1, const PiecewiseTrajectory& traj2, double t,
                   double R, const SphereMesh& mesh, FieldMode mode, double guard) {
  const PiecewiseTrajectory charges[] = {traj1, traj2};
  return sphere_flux(charges, t, R, mesh, mode, guard);
}

std::vector<FarFieldSample> field_map(const PiecewiseTrajectory& traj1,
                                      const PiecewiseTrajectory& traj2, std::span<const double> times,
                                      std::span<const Vec3> directions, double R) {
  std::vector<FarFieldSample> out(times.size() * directions.size());
  parallel_for(out.size(), [&](std::size_t k) {
    const double t = times[k / directions.size()];
    const Vec3& n = directions[k % directions.size()];
    out[k] = wf_far(traj1, traj2, t, n, R);
  });
  return out;
}

void write_field_csv(std::ostream& os, std::span<const FarFieldSample> samples) {
  os << "t,nx,ny,nz,Ex,Ey,Ez,Bx,By,Bz,defined\n";
  char buf[512];
  for (const auto& s : samples) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%d\n", s.t,
                  s.n.x, s.n.y, s.n.z, s.E.x, s.E.y, s.E.z, s.B.x, s.B.y, s.B.z, s.defined ? 1 : 0);
    os << buf;
  }
}

}  // namespace wfvar
