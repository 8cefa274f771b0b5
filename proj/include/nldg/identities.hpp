#pragma once

// Randomized checks of the shift-operator identities
//
//   K_s = -H_s^T
//   v^T H_s v = -1/(2s) int_a^b (v(x+s) - v(x))^2 dx
//
// and of the k = 0 closed form of the stiffness operator.  Used by the
// `selftest` subcommand and by the test suites.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "nldg/dg_space.hpp"
#include "nldg/kernel.hpp"
#include "nldg/nonlocal_assembly.hpp"
#include "nldg/quadrature.hpp"

namespace nldg {

/// -1/(2s) int (v(x+s) - v(x))^2 dx by piecewise Gauss quadrature, split at
/// every point where x or x+s crosses a mesh vertex.
inline double shift_energy_reference(const FieldCoeffs& v, double s) {
  const DgSpace& sp = v.space;
  const int nm = sp.modes();
  std::vector<double> cuts;
  for (int i = 0; i <= sp.cells(); ++i) {
    const double vertex = sp.a() + i * sp.h();
    cuts.push_back(vertex);
    double y = sp.wrap(vertex - s);
    if (y > sp.a() && y < sp.b()) cuts.push_back(y);
  }
  std::sort(cuts.begin(), cuts.end());
  const QuadRule ref = gauss_legendre(nm + 1, -1.0, 1.0);
  double acc = 0.0;
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double lo = cuts[c];
    const double hi = cuts[c + 1];
    if (hi - lo < 1e-14 * sp.length()) continue;
    const double half = 0.5 * (hi - lo);
    const double mid = 0.5 * (hi + lo);
    for (std::size_t q = 0; q < ref.size(); ++q) {
      const double x = mid + half * ref.nodes[q];
      const double d = eval_field(v, x + s) - eval_field(v, x);
      acc += half * ref.weights[q] * d * d;
    }
  }
  return -acc / (2.0 * s);
}

struct IdentityReport {
  int cases = 0;
  double max_skew = 0.0;       // max |K_s + H_s^T|
  double max_quadratic = 0.0;  // max relative gap in the quadratic-form identity
};

/// Random (N <= 16, k <= 3, s) cases with a fixed seed.
inline IdentityReport run_identity_suite(int cases, std::uint64_t seed = 20240611) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> cells_dist(2, 16);
  std::uniform_int_distribution<int> degree_dist(0, 3);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> coeff(-1.0, 1.0);
  IdentityReport rep;
  for (int c = 0; c < cases; ++c) {
    const int n = cells_dist(rng);
    const int k = degree_dist(rng);
    const DgSpace sp = make_space(0.0, 1.0, n, k);
    // shifts up to (N-1) cells, including whole multiples of h now and then
    double s = (0.01 + unit(rng) * (n - 1.02)) * sp.h();
    if (c % 7 == 3) s = std::max(1, static_cast<int>(unit(rng) * (n - 1))) * sp.h();

    const Eigen::MatrixXd hs = shift_matrix_H(sp, s).to_dense();
    const Eigen::MatrixXd ks = shift_matrix_K(sp, s).to_dense();
    rep.max_skew = std::max(rep.max_skew, (ks + hs.transpose()).cwiseAbs().maxCoeff());

    FieldCoeffs v(sp);
    for (double& x : v.coeffs) x = coeff(rng);
    const Eigen::Map<const Eigen::VectorXd> vv(v.coeffs.data(), static_cast<Eigen::Index>(sp.dofs()));
    const double form = vv.dot(hs * vv);
    const double ref = shift_energy_reference(v, s);
    rep.max_quadratic = std::max(rep.max_quadratic, std::abs(form - ref) / std::abs(ref));
    ++rep.cases;
  }
  return rep;
}

/// Max |S - (1/h) circ(-1, 2, -1)| for k = 0 and delta <= h.
inline double k0_closed_form_gap(double alpha, double delta_over_h, int cells = 10,
                                 int nodes_per_panel = 8) {
  const DgSpace sp = make_space(0.0, 1.0, cells, 0);
  const KernelSpec kernel = make_kernel(alpha, delta_over_h * sp.h());
  const Eigen::MatrixXd s = stiffness_matrix(sp, kernel, {nodes_per_panel}).to_dense();
  Eigen::MatrixXd ref = Eigen::MatrixXd::Zero(cells, cells);
  for (int j = 0; j < cells; ++j) {
    ref(j, j) = 2.0 / sp.h();
    ref(j, (j + 1) % cells) -= 1.0 / sp.h();
    ref(j, (j + cells - 1) % cells) -= 1.0 / sp.h();
  }
  return (s - ref).cwiseAbs().maxCoeff();
}

}  // namespace nldg
