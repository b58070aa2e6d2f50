#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace wfvar {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss-Legendre rule (cached, thread safe).
const GaussRule& gauss_legendre(int n);

struct QuadratureOptions {
  double rel_tol = 1e-13;
  double abs_tol = 1e-15;
  int order = 16;
  int max_depth = 40;
};

/// Adaptive Gauss-Legendre integral over [a, b]: a panel is accepted when the
/// one-panel and two-half-panel estimates agree.
double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& opts = {});

/// Vector-valued version; the error test uses the max norm.
Eigen::VectorXd integrate_vector(const std::function<Eigen::VectorXd(double)>& f, double a, double b,
                                 const QuadratureOptions& opts = {});

/// Sum of adaptive integrals over consecutive panels [cuts[i], cuts[i+1]].
double integrate_piecewise(const std::function<double(double)>& f, std::span<const double> cuts,
                           const QuadratureOptions& opts = {});

Eigen::VectorXd integrate_vector_piecewise(const std::function<Eigen::VectorXd(double)>& f,
                                           std::span<const double> cuts,
                                           const QuadratureOptions& opts = {});

}  // namespace wfvar
