#pragma once

// Brute-force dense reference for the nonlocal stiffness operator, for tiny
// problems only.  Shares no assembly code with nonlocal_assembly.hpp: basis
// functions are evaluated in global coordinates, every cell integral is split
// at breakpoints found by search, and the s-integral is computed adaptively
// without knowledge of where H_s has kinks.

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>
#include <vector>

#include <Eigen/Dense>

#include "nldg/dg_space.hpp"
#include "nldg/errors.hpp"
#include "nldg/kernel.hpp"
#include "nldg/nonlocal_assembly.hpp"
#include "nldg/quadrature.hpp"

namespace nldg {

namespace oracle {

/// Value of global basis function (cell, mode) at x after periodic wrapping;
/// zero outside its half-open cell.
inline double basis_value(const DgSpace& sp, int cell, int mode, double x) {
  const double L = sp.length();
  double y = std::fmod(x - sp.a(), L);
  if (y < 0) y += L;
  const double left = cell * sp.h();
  if (y < left || y >= left + sp.h()) return 0.0;
  return legendre(mode, 2.0 * (y - left) / sp.h() - 1.0);
}

/// Dense H_s (forward) or K_s (backward) with `points` Gauss nodes per smooth piece.
inline Eigen::MatrixXd dense_difference_quotient(const DgSpace& sp, double s, SchemeVariant v,
                                                 int points = 16) {
  const int nm = sp.modes();
  const auto n = static_cast<Eigen::Index>(sp.dofs());
  const double L = sp.length();
  const double shift = v == SchemeVariant::forward ? s : -s;
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (int j = 0; j < sp.cells(); ++j) {
    const double xl = sp.cell_left(j);
    const double xr = xl + sp.h();
    // breakpoints: x in I_j where x + shift hits a mesh vertex
    std::vector<double> cuts{xl, xr};
    for (int i = -sp.cells() - 2; i <= 2 * sp.cells() + 2; ++i) {
      const double vertex = sp.a() + i * sp.h();
      const double x = vertex - shift;
      if (x > xl + 1e-15 * L && x < xr - 1e-15 * L) cuts.push_back(x);
    }
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
      const QuadRule g = gauss_legendre(points, cuts[c], cuts[c + 1]);
      for (std::size_t q = 0; q < g.size(); ++q) {
        const double x = g.nodes[q];
        for (int m = 0; m < nm; ++m) {
          const double w = basis_value(sp, j, m, x);
          for (int i = 0; i < sp.cells(); ++i)
            for (int l = 0; l < nm; ++l) {
              const double shifted = basis_value(sp, i, l, x + shift);
              const double here = basis_value(sp, i, l, x);
              const double diff = v == SchemeVariant::forward ? shifted - here : here - shifted;
              out(j * nm + m, i * nm + l) += g.weights[q] * diff * w / s;
            }
        }
      }
    }
  }
  return out;
}

inline Eigen::MatrixXd dense_inverse_mass(const DgSpace& sp) {
  const auto n = static_cast<Eigen::Index>(sp.dofs());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  // int_{I_j} P_m^2 computed by quadrature rather than the closed form
  const QuadRule g = gauss_legendre(sp.modes() + 1, -1.0, 1.0);
  for (int j = 0; j < sp.cells(); ++j)
    for (int md = 0; md < sp.modes(); ++md) {
      double acc = 0.0;
      for (std::size_t q = 0; q < g.size(); ++q) {
        const double p = legendre(md, g.nodes[q]);
        acc += g.weights[q] * p * p;
      }
      m(j * sp.modes() + md, j * sp.modes() + md) = 1.0 / (0.5 * sp.h() * acc);
    }
  return m;
}

}  // namespace oracle

/// Dense stiffness by adaptive s-integration, refined until successive
/// results agree to rel_tol (relative to the max entry).
inline Eigen::MatrixXd dense_stiffness_oracle(const DgSpace& space, const KernelSpec& kernel,
                                              double rel_tol,
                                              SchemeVariant variant = SchemeVariant::forward) {
  if (space.dofs() > 64) throw DomainError("dense_stiffness_oracle: limited to N*(k+1) <= 64");
  const double beta = 2.0 - kernel.alpha;
  const double eps = std::min(space.h(), kernel.delta) / 64.0;
  const Eigen::MatrixXd inv_mass = oracle::dense_inverse_mass(space);

  auto integrand = [&](double s) -> Eigen::MatrixXd {
    const Eigen::MatrixXd q = oracle::dense_difference_quotient(space, s, variant);
    return q.transpose() * inv_mass * q;
  };

  // (0, eps): power-weight rule, 16 nodes.
  Eigen::MatrixXd head = Eigen::MatrixXd::Zero(space.dofs(), space.dofs());
  const QuadRule near = gauss_jacobi_weighted(16, beta, eps);
  for (std::size_t i = 0; i < near.size(); ++i) head += near.weights[i] * integrand(near.nodes[i]);

  const QuadRule ref = gauss_legendre(10, -1.0, 1.0);
  auto panel = [&](double lo, double hi) -> Eigen::MatrixXd {
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(space.dofs(), space.dofs());
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    for (std::size_t i = 0; i < ref.size(); ++i) {
      const double s = mid + half * ref.nodes[i];
      acc += (half * ref.weights[i] * std::pow(s, beta)) * integrand(s);
    }
    return acc;
  };

  // Bisection refinement: accept a panel when its estimate matches the sum of
  // its halves to a tolerance proportional to the panel width.
  long panels = 0;
  std::function<Eigen::MatrixXd(double, double, const Eigen::MatrixXd&, double, int)> adapt =
      [&](double lo, double hi, const Eigen::MatrixXd& whole, double tol, int depth) -> Eigen::MatrixXd {
    const double mid = 0.5 * (lo + hi);
    const Eigen::MatrixXd left = panel(lo, mid);
    const Eigen::MatrixXd right = panel(mid, hi);
    Eigen::MatrixXd sum = left + right;
    if ((sum - whole).cwiseAbs().maxCoeff() <= tol || depth > 40) return sum;
    if (++panels > 200000) throw NumericalError("dense_stiffness_oracle: adaptive panel budget exhausted");
    return adapt(lo, mid, left, 0.5 * tol, depth + 1) + adapt(mid, hi, right, 0.5 * tol, depth + 1);
  };

  const Eigen::MatrixXd coarse = panel(eps, kernel.delta);
  const double magnitude = std::max(coarse.cwiseAbs().maxCoeff(), head.cwiseAbs().maxCoeff());
  Eigen::MatrixXd prev;
  const double tolerances[] = {1e-6, 1e-8, 1e-10, 1e-12, 1e-13};
  for (int level = 0; level < 5; ++level) {
    const Eigen::MatrixXd body = adapt(eps, kernel.delta, coarse, tolerances[level] * magnitude, 0);
    Eigen::MatrixXd cur = 2.0 * kernel.c_gamma * (head + body);
    if (level > 0) {
      const double scale = std::max(cur.cwiseAbs().maxCoeff(), 1e-300);
      if ((cur - prev).cwiseAbs().maxCoeff() < rel_tol * scale) return cur;
    }
    prev = std::move(cur);
  }
  std::ostringstream os;
  os << "dense_stiffness_oracle: refinement did not reach rel_tol=" << rel_tol;
  throw NumericalError(os.str());
}

}  // namespace nldg
