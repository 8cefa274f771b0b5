#pragma once

// One-dimensional quadrature rules: Gauss-Legendre, Gauss-Lobatto and the
// power-weighted Gauss-Jacobi rule used for the singular part of the kernel
// integral.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Eigenvalues>

#include "nldg/errors.hpp"

namespace nldg {

/// What the weights of a QuadRule integrate against.
struct WeightKind {
  enum class Type { unit, power };
  Type type = Type::unit;
  double beta = 0.0;  // exponent of s^beta when type == power

  static WeightKind unit() { return {}; }
  static WeightKind power(double b) { return {Type::power, b}; }
};

/// Nodes and weights on (lo, hi).  Sum_i w_i g(s_i) approximates
/// int_lo^hi g(s) ds (unit) or int_lo^hi s^beta g(s) ds (power).
struct QuadRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  double lo = -1.0;
  double hi = 1.0;
  WeightKind weight_kind;

  [[nodiscard]] std::size_t size() const { return nodes.size(); }

  template <class F>
  [[nodiscard]] auto apply(F&& g) const {
    decltype(g(0.0)) acc{};
    for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * g(nodes[i]);
    return acc;
  }
};

/// Value and derivative of the Legendre polynomial P_n at t.
inline std::pair<double, double> legendre_with_derivative(int n, double t) {
  if (n == 0) return {1.0, 0.0};
  double p_prev = 1.0;
  double p = t;
  for (int m = 2; m <= n; ++m) {
    const double p_next = ((2.0 * m - 1.0) * t * p - (m - 1.0) * p_prev) / m;
    p_prev = p;
    p = p_next;
  }
  // P_n' from the standard identity; the endpoint formula avoids 0/0.
  double dp;
  if (std::abs(1.0 - t * t) < 1e-300) {
    dp = 0.5 * n * (n + 1.0) * (t > 0 ? 1.0 : (n % 2 == 0 ? -1.0 : 1.0));
  } else {
    dp = n * (p_prev - t * p) / (1.0 - t * t);
  }
  return {p, dp};
}

inline double legendre(int n, double t) { return legendre_with_derivative(n, t).first; }

namespace detail {

inline QuadRule map_rule(std::vector<double> ref_nodes, std::vector<double> ref_weights,
                         double lo, double hi) {
  const double half = 0.5 * (hi - lo);
  const double mid = 0.5 * (hi + lo);
  QuadRule rule;
  rule.lo = lo;
  rule.hi = hi;
  rule.nodes.resize(ref_nodes.size());
  rule.weights.resize(ref_nodes.size());
  for (std::size_t i = 0; i < ref_nodes.size(); ++i) {
    rule.nodes[i] = mid + half * ref_nodes[i];
    rule.weights[i] = half * ref_weights[i];
  }
  return rule;
}

}  // namespace detail

/// n-point Gauss-Legendre rule on (lo, hi); exact for polynomials of degree <= 2n-1.
inline QuadRule gauss_legendre(int n, double lo, double hi) {
  if (n < 1) throw DomainError("gauss_legendre: n must be >= 1, got " + std::to_string(n));
  if (!(lo < hi)) throw DomainError("gauss_legendre: require lo < hi");
  std::vector<double> t(n), w(n);
  for (int i = 0; i < n; ++i) {
    // Newton from the Tricomi-style initial guess; roots come out decreasing.
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, dp] = legendre_with_derivative(n, x);
      const double dx = p / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    const double dp = legendre_with_derivative(n, x).second;
    t[n - 1 - i] = x;
    w[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  return detail::map_rule(std::move(t), std::move(w), lo, hi);
}

/// n-point Gauss-Lobatto rule on (lo, hi) including both endpoints; exact for
/// degree <= 2n-3.
inline QuadRule gauss_lobatto(int n, double lo, double hi) {
  if (n < 2) throw DomainError("gauss_lobatto: n must be >= 2, got " + std::to_string(n));
  if (!(lo < hi)) throw DomainError("gauss_lobatto: require lo < hi");
  const int deg = n - 1;  // interior nodes are the roots of P_deg'
  std::vector<double> t(n), w(n);
  t[0] = -1.0;
  t[n - 1] = 1.0;
  for (int i = 1; i < n - 1; ++i) {
    double x = -std::cos(std::numbers::pi * i / deg);
    for (int it = 0; it < 100; ++it) {
      // Newton on P_deg'(x); P_deg'' from the Legendre ODE.
      const auto [p, dp] = legendre_with_derivative(deg, x);
      const double d2p = (2.0 * x * dp - deg * (deg + 1.0) * p) / (1.0 - x * x);
      const double dx = dp / d2p;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    t[i] = x;
  }
  for (int i = 0; i < n; ++i) {
    const double p = legendre(deg, t[i]);
    w[i] = 2.0 / (deg * (deg + 1.0) * p * p);
  }
  return detail::map_rule(std::move(t), std::move(w), lo, hi);
}

/// n-point rule on (0, hi) for the weight s^beta (beta > -1):
/// Sum_i w_i g(s_i) = int_0^hi s^beta g(s) ds exactly for deg g <= 2n-1.
///
/// Nodes come from the Golub-Welsch eigenproblem for the Jacobi weight
/// (1-t)^0 (1+t)^beta on (-1, 1), mapped affinely to (0, hi).
inline QuadRule gauss_jacobi_weighted(int n, double beta, double hi) {
  if (n < 1) throw DomainError("gauss_jacobi_weighted: n must be >= 1");
  if (!(beta > -1.0))
    throw DomainError("gauss_jacobi_weighted: weight s^beta is not integrable for beta <= -1");
  if (!(hi > 0.0)) throw DomainError("gauss_jacobi_weighted: require hi > 0");

  const double a = 0.0;
  const double b = beta;
  Eigen::VectorXd diag(n);
  Eigen::VectorXd sub(std::max(n - 1, 1));
  diag(0) = (b - a) / (a + b + 2.0);
  for (int m = 1; m < n; ++m) {
    const double s = 2.0 * m + a + b;
    diag(m) = (b * b - a * a) / (s * (s + 2.0));
    const double num = 4.0 * m * (m + a) * (m + b) * (m + a + b);
    const double den = s * s * (s + 1.0) * (s - 1.0);
    sub(m - 1) = std::sqrt(num / den);
  }
  // mu0 = int_{-1}^{1} (1+t)^beta dt
  const double mu0 = std::pow(2.0, b + 1.0) / (b + 1.0);

  std::vector<double> t(n), w(n);
  if (n == 1) {
    t[0] = diag(0);
    w[0] = mu0;
  } else {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
    eig.computeFromTridiagonal(diag, sub.head(n - 1), Eigen::ComputeEigenvectors);
    if (eig.info() != Eigen::Success)
      throw NumericalError("gauss_jacobi_weighted: tridiagonal eigensolve failed");
    for (int i = 0; i < n; ++i) {
      t[i] = eig.eigenvalues()(i);
      const double v0 = eig.eigenvectors()(0, i);
      w[i] = mu0 * v0 * v0;
    }
  }

  // s = hi (1+t)/2  =>  s^beta ds = (hi/2)^(beta+1) (1+t)^beta dt
  const double scale = std::pow(0.5 * hi, b + 1.0);
  QuadRule rule;
  rule.lo = 0.0;
  rule.hi = hi;
  rule.weight_kind = WeightKind::power(beta);
  rule.nodes.resize(n);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = 0.5 * hi * (1.0 + t[i]);
    rule.weights[i] = scale * w[i];
  }
  return rule;
}

}  // namespace nldg
