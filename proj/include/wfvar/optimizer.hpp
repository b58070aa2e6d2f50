#pragma once

#include <array>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "wfvar/core.hpp"
#include "wfvar/momentum.hpp"
#include "wfvar/quadrature.hpp"

namespace wfvar {

/// Discretized trajectory of one particle on its variable window: a cubic
/// spline through node positions, C2 inside each smooth piece, clamped at the
/// piece ends by the one-sided break velocities or the window end velocities.
/// Nodes are equally spaced inside every piece and shared at the breaks.
struct ParticleDecision {
  ParticleParams particle;
  TimeWindow window;
  /// Interior breaking points, strictly inside the window and increasing.
  std::vector<double> break_times;
  /// Nodes per piece, counting both piece ends.
  int nodes_per_segment = 4;
  /// One per node; the first and last are pinned.
  std::vector<Vec3> positions;
  /// One-sided velocities before and after each break.
  std::vector<Vec3> v_left;
  std::vector<Vec3> v_right;
  /// Slopes at the window ends.
  Vec3 v_start;
  Vec3 v_end;

  std::vector<double> node_times() const;
  std::size_t piece_count() const { return break_times.size() + 1; }
};

struct DecisionVector {
  std::array<ParticleDecision, 2> particles;
  bool free_break_times = false;

  /// Free variables of one particle (0 or 1): interior node positions, the
  /// window end slopes, (v_left, v_right) per break, then the break times when
  /// they are free.
  std::size_t free_count(int particle) const;
  Eigen::VectorXd free_values(int particle) const;
  void set_free_values(int particle, const Eigen::VectorXd& values);
};

/// Samples both trajectories at the nodes and one-sided velocities at the
/// breaks. Throws ConfigError for fewer than 2 nodes per piece or misplaced
/// break times.
DecisionVector discretize(const BoundaryData& boundary, const PiecewiseTrajectory& traj1,
                          const PiecewiseTrajectory& traj2, int nodes_per_segment,
                          const std::vector<double>& breaks1 = {}, const std::vector<double>& breaks2 = {});

/// Spline trajectory on the window of `d`.
PiecewiseTrajectory decode(const ParticleDecision& d);

/// Perturbations along the position and velocity variables of `d`, in the
/// order of `DecisionVector::free_values` (break times excluded). Each one
/// vanishes at the window ends.
std::vector<Perturbation> decision_basis(const ParticleDecision& d);

/// Action of one particle's variation (0: window1 with partner history2,
/// 1: window2 with partner history1), including its additive constant.
double block_action(const BoundaryData& boundary, const DecisionVector& x, int particle,
                    const QuadratureOptions& quad = {});

/// Gradient of `block_action` with respect to the free variables of one
/// particle. Break-time entries use central differences.
Eigen::VectorXd block_gradient(const BoundaryData& boundary, const DecisionVector& x, int particle,
                               const QuadratureOptions& quad = {});

struct SegmentResidual {
  int particle = 1;
  double t0 = 0.0;
  double t1 = 0.0;
  double max_el = 0.0;
};

struct StepRecord {
  int particle = 1;
  /// Block action after the accepted step.
  double action = 0.0;
};

struct MinimizerReport {
  /// Sum of both block actions.
  double action = 0.0;
  std::vector<SegmentResidual> segments;
  double max_el_residual = 0.0;
  /// Residuals at the junctions where the velocity jumps.
  std::vector<BreakResidual> breaks;
  double max_break_residual = 0.0;
  int iterations = 0;
  double gradient_norm = 0.0;
  bool gradient_converged = false;
  /// Gradient test passed and both residual maxima are below tolerance.
  bool converged = false;
  std::vector<StepRecord> trace;
  std::string message;
};

struct VerifyOptions {
  int chebyshev_points = 9;
  /// Junctions whose velocity jump is below this count as smooth knots.
  double break_jump_tol = 1e-9;
};

/// EL residuals on a Chebyshev grid inside every segment of both windows and
/// break residuals at every velocity jump.
MinimizerReport verify(const PiecewiseTrajectory& traj1, const PiecewiseTrajectory& traj2,
                       const BoundaryData& boundary, const VerifyOptions& opts = {});

struct MinimizeOptions {
  double gtol = 1e-8;
  /// Cap on accepted steps over all blocks.
  int max_iter = 200;
  /// Cap on steps per block visit.
  int block_iter = 20;
  int memory = 8;
  /// Initial trust radius on the max-norm of a step.
  double max_step = 0.25;
  double el_tol = 1e-6;
  double break_tol = 1e-6;
  QuadratureOptions quadrature{1e-11, 1e-14, 16, 40};
  VerifyOptions verify;
};

struct MinimizeResult {
  PiecewiseTrajectory traj1;
  PiecewiseTrajectory traj2;
  DecisionVector x;
  MinimizerReport report;
};

/// Block coordinate descent on the two block actions, each by L-BFGS with an
/// Armijo backtracking line search. Throws SuperluminalError for an infeasible
/// start and ContractError when pinned endpoints disagree with the histories.
MinimizeResult minimize(const BoundaryData& boundary, const DecisionVector& init,
                        const MinimizeOptions& opts = {});

}  // namespace wfvar
