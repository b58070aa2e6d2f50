#include "wfvar/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>


namespace wfvar {

namespace {

GaussRule build_rule(int n) {
  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(n));
  rule.weights.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    // Newton iteration on P_n from the Chebyshev-like initial guess.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
      const double dx = p1 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    {
      double p0 = 1.0, p1 = x;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      dp = n * (x * p1 - p0) / (x * x - 1.0);
    }
    rule.nodes[static_cast<std::size_t>(i)] = x;
    rule.weights[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return rule;
}

template <typename T, typename F>
T panel(const F& f, double a, double b, const GaussRule& rule) {
  const double half = 0.5 * (b - a);
  const double mid = 0.5 * (a + b);
  T acc = rule.weights[0] * f(mid + half * rule.nodes[0]);
  for (std::size_t i = 1; i < rule.nodes.size(); ++i) acc += rule.weights[i] * f(mid + half * rule.nodes[i]);
  return T(acc * half);
}

double magnitude(double v) { return std::abs(v); }
double magnitude(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

template <typename T, typename F>
T adapt(const F& f, double a, double b, const T& whole, const GaussRule& rule,
        const QuadratureOptions& opts, double scale, int depth) {
  const double m = 0.5 * (a + b);
  const T left = panel<T>(f, a, m, rule);
  const T right = panel<T>(f, m, b, rule);
  const T sum = T(left + right);
  const double err = magnitude(T(sum - whole));
  const double tol = std::max(opts.abs_tol, opts.rel_tol * scale);
  if (err <= tol || depth >= opts.max_depth || m <= a || m >= b) return sum;
  return T(adapt<T>(f, a, m, left, rule, opts, scale, depth + 1) +
           adapt<T>(f, m, b, right, rule, opts, scale, depth + 1));
}

}  // namespace

const GaussRule& gauss_legendre(int n) {
  static std::mutex mutex;
  static std::map<int, GaussRule> cache;
  std::lock_guard<std::mutex> lock(mutex);
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, build_rule(n)).first;
  return it->second;
}

double integrate(const std::function<double(double)>& f, double a, double b,
                 const QuadratureOptions& opts) {
  if (b == a) return 0.0;
  const GaussRule& rule = gauss_legendre(opts.order);
  const double whole = panel<double>(f, a, b, rule);
  const double scale = panel<double>([&](double t) { return std::abs(f(t)); }, a, b, rule);
  return adapt<double>(f, a, b, whole, rule, opts, std::abs(scale), 0);
}

Eigen::VectorXd integrate_vector(const std::function<Eigen::VectorXd(double)>& f, double a,
                                 double b, const QuadratureOptions& opts) {
  const GaussRule& rule = gauss_legendre(opts.order);
  const Eigen::VectorXd whole = panel<Eigen::VectorXd>(f, a, b, rule);
  if (b == a) return Eigen::VectorXd::Zero(whole.size());
  const double scale =
      std::abs(panel<double>([&](double t) { return magnitude(f(t)); }, a, b, rule));
  return adapt<Eigen::VectorXd>(f, a, b, whole, rule, opts, scale, 0);
}

double integrate_piecewise(const std::function<double(double)>& f, std::span<const double> cuts,
                           const QuadratureOptions& opts) {
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) acc += integrate(f, cuts[i], cuts[i + 1], opts);
  return acc;
}

Eigen::VectorXd integrate_vector_piecewise(const std::function<Eigen::VectorXd(double)>& f,
                                           std::span<const double> cuts,
                                           const QuadratureOptions& opts) {
  Eigen::VectorXd acc;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    Eigen::VectorXd part = integrate_vector(f, cuts[i], cuts[i + 1], opts);
    if (acc.size() == 0) {
      acc = std::move(part);
    } else {
      acc += part;
    }
  }
  return acc;
}

}  // namespace wfvar
