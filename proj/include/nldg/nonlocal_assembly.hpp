#pragma once

// Shift operators H_s, K_s and the reduced nonlocal stiffness operator
//
//   S = 2 int_0^delta s^2 gamma(s) H_s^T M^{-1} H_s ds
//
// obtained by eliminating the auxiliary difference-quotient field q_h through
// the diagonal mass operator.  The backward variant uses K_s in place of H_s.

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "nldg/dg_space.hpp"
#include "nldg/errors.hpp"
#include "nldg/kernel.hpp"
#include "nldg/operator_matrix.hpp"
#include "nldg/quadrature.hpp"

namespace nldg {

/// Quadrature in the interaction distance s.  Panels break at multiples of h;
/// the first panel carries the singular weight s^(2-alpha).
struct SQuadConfig {
  int nodes_per_panel = 8;
};

/// forward:  q(x;s) = (u(x+s) - u(x)) / s
/// backward: q(x;s) = (u(x) - u(x-s)) / s
enum class SchemeVariant { forward, backward };

inline const char* to_string(SchemeVariant v) {
  return v == SchemeVariant::forward ? "forward" : "backward";
}

namespace detail {

// Split s = p*h + r with 0 <= r < h, robust to roundoff at r ~ 0 or r ~ h.
inline void split_shift(double s, double h, int& p, double& r) {
  p = static_cast<int>(std::floor(s / h));
  r = s - p * h;
  if (r < 0.0) {
    --p;
    r += h;
  }
  if (r >= h) {
    ++p;
    r -= h;
  }
  if (r < 1e-14 * h) r = 0.0;
  if (h - r < 1e-14 * h) {
    ++p;
    r = 0.0;
  }
}

// blk[m][l] += (h/2) int_{lo}^{hi} P_l(t + shift) P_m(t) dt, exact for the
// degree-2k integrand with k+1 Gauss points.
// With `minus_self`, P_l(t + shift) is replaced by P_l(t + shift) - P_l(t).
inline void accumulate_overlap(OperatorMatrix& out, int d, const DgSpace& sp, double lo, double hi,
                               double shift, double scale, bool minus_self = false) {
  if (!(hi > lo)) return;
  const int nm = sp.modes();
  const QuadRule g = gauss_legendre(nm, lo, hi);
  for (std::size_t q = 0; q < g.size(); ++q) {
    const double t = g.nodes[q];
    const double wq = g.weights[q] * 0.5 * sp.h() * scale;
    for (int m = 0; m < nm; ++m) {
      const double pm = legendre(m, t);
      for (int l = 0; l < nm; ++l) {
        const double pl = minus_self ? legendre(l, t + shift) - legendre(l, t) : legendre(l, t + shift);
        out.at(d, m, l) += wq * pl * pm;
      }
    }
  }
}

// blk[m][l] -= (h/2) int_{lo}^{hi} P_l(t) P_m(t) dt
inline void subtract_self_overlap(OperatorMatrix& out, const DgSpace& sp, double lo, double hi,
                                  double scale) {
  accumulate_overlap(out, 0, sp, lo, hi, 0.0, -scale);
}

inline void check_shift(const DgSpace& space, double s, const char* who) {
  if (!(s > 0.0 && s < space.length())) {
    std::ostringstream os;
    os << who << ": shift s must lie in (0, " << space.length() << "), got " << s;
    throw DomainError(os.str());
  }
}

}  // namespace detail

/// Matrix of H(v, w; s) = sum_j int_{I_j} (v(x+s) - v(x)) w(x) / s dx.
/// Rows index the test function w, columns the trial function v.
inline OperatorMatrix shift_matrix_H(const DgSpace& space, double s) {
  detail::check_shift(space, s, "shift_matrix_H");
  int p;
  double r;
  detail::split_shift(s, space.h(), p, r);
  const double rho = 2.0 * r / space.h();
  OperatorMatrix hs(space.cells(), space.modes(), p + 1);
  // x+s stays in cell j+p for t in (-1, 1-rho), then moves to cell j+p+1.
  if (p == 0) {
    // subtract the identity under the integral so constants cancel exactly for small s
    detail::accumulate_overlap(hs, 0, space, -1.0, 1.0 - rho, rho, 1.0 / s, true);
    detail::subtract_self_overlap(hs, space, 1.0 - rho, 1.0, 1.0 / s);
    detail::accumulate_overlap(hs, 1, space, 1.0 - rho, 1.0, rho - 2.0, 1.0 / s);
    return hs;
  }
  detail::accumulate_overlap(hs, p, space, -1.0, 1.0 - rho, rho, 1.0 / s);
  detail::accumulate_overlap(hs, p + 1, space, 1.0 - rho, 1.0, rho - 2.0, 1.0 / s);
  for (int m = 0; m < space.modes(); ++m) hs.at(0, m, m) -= space.mass(m) / s;
  return hs;
}

/// Matrix of K(v, w; s) = sum_j int_{I_j} (v(x) - v(x-s)) w(x) / s dx.
inline OperatorMatrix shift_matrix_K(const DgSpace& space, double s) {
  detail::check_shift(space, s, "shift_matrix_K");
  int p;
  double r;
  detail::split_shift(s, space.h(), p, r);
  const double rho = 2.0 * r / space.h();
  OperatorMatrix ks(space.cells(), space.modes(), p + 1);
  if (p == 0) {
    detail::accumulate_overlap(ks, 0, space, -1.0 + rho, 1.0, -rho, -1.0 / s, true);
    detail::subtract_self_overlap(ks, space, -1.0, -1.0 + rho, -1.0 / s);
    detail::accumulate_overlap(ks, -1, space, -1.0, -1.0 + rho, 2.0 - rho, -1.0 / s);
    return ks;
  }
  detail::accumulate_overlap(ks, -p, space, -1.0 + rho, 1.0, -rho, -1.0 / s);
  detail::accumulate_overlap(ks, -p - 1, space, -1.0, -1.0 + rho, 2.0 - rho, -1.0 / s);
  for (int m = 0; m < space.modes(); ++m) ks.at(0, m, m) += space.mass(m) / s;
  return ks;
}

inline OperatorMatrix difference_quotient(const DgSpace& space, double s, SchemeVariant v) {
  return v == SchemeVariant::forward ? shift_matrix_H(space, s) : shift_matrix_K(space, s);
}

/// Number of interacting cell offsets implied by the horizon, ceil(delta/h).
inline int interaction_cells(const DgSpace& space, double delta) {
  return static_cast<int>(std::ceil(delta / space.h() - 1e-10));
}

/// Throws unless the interaction band ceil(delta/h)+1 fits in N-1 cells.
inline void check_bandwidth(const DgSpace& space, double delta) {
  const int band = interaction_cells(space, delta) + 1;
  if (band <= space.cells() - 1) return;
  std::ostringstream os;
  os << "horizon delta=" << delta << " needs bandwidth " << band << " cells but N-1="
     << space.cells() - 1 << "; ";
  int needed = -1;
  for (int n = space.cells() + 1; n <= 1 << 22; ++n) {
    const double h = space.length() / n;
    if (static_cast<int>(std::ceil(delta / h - 1e-10)) + 1 <= n - 1) {
      needed = n;
      break;
    }
  }
  if (needed > 0)
    os << "use N >= " << needed;
  else
    os << "delta is too large for the periodic domain";
  throw DomainError(os.str());
}

namespace detail {

inline std::vector<double> inverse_mass(const DgSpace& space) {
  std::vector<double> inv(space.modes());
  for (int m = 0; m < space.modes(); ++m) inv[m] = 1.0 / space.mass(m);
  return inv;
}

inline OperatorMatrix trimmed(const OperatorMatrix& a) {
  const int w = a.effective_half_band();
  OperatorMatrix out(a.cells(), a.modes(), w);
  for (int d = -w; d <= w; ++d)
    for (int r = 0; r < a.modes(); ++r)
      for (int c = 0; c < a.modes(); ++c) out.at(d, r, c) = a.at(d, r, c);
  return out;
}

}  // namespace detail

/// What to do when the interaction band would wrap onto itself.  `alias`
/// keeps the block-circulant representation, whose wrapped offsets are
/// summed by every consumer; `reject` enforces ceil(delta/h)+1 <= N-1.
enum class WrapPolicy { reject, alias };

/// Reduced stiffness operator of the two-field nonlocal DG scheme.
///
/// The first s-panel (0, min(h, delta)) uses the s^(2-alpha)-weighted
/// Gauss-Jacobi rule; there H_s is a polynomial of degree 2k in s, so at
/// least 2k+1 nodes make that panel exact.  Later panels use Gauss-Legendre
/// on the full weighted integrand, split near s = h where g varies fastest.
inline OperatorMatrix stiffness_matrix(const DgSpace& space, const KernelSpec& kernel,
                                       const SQuadConfig& squad = {},
                                       SchemeVariant variant = SchemeVariant::forward,
                                       WrapPolicy wrap = WrapPolicy::reject) {
  if (squad.nodes_per_panel < 1) throw DomainError("stiffness_matrix: nodes_per_panel must be >= 1");
  if (wrap == WrapPolicy::reject) check_bandwidth(space, kernel.delta);
  if (!(kernel.delta < space.length())) throw DomainError("stiffness_matrix: delta must be < b - a");

  const double h = space.h();
  const double delta = kernel.delta;
  const double beta = 2.0 - kernel.alpha;
  const std::vector<double> inv_mass = detail::inverse_mass(space);

  OperatorMatrix s_mat(space.cells(), space.modes(), interaction_cells(space, delta));
  auto accumulate = [&](double s, double weight) {
    const OperatorMatrix q = difference_quotient(space, s, variant);
    s_mat.add_scaled(multiply(q.transpose(), inv_mass, q), weight);
  };

  // Fixed reduction order: panel index, then node index.
  for (int p = 0;; ++p) {
    const double lo = p * h;
    if (lo >= delta * (1.0 - 1e-12)) break;
    const double hi = std::min((p + 1) * h, delta);
    if (p == 0) {
      const int n = std::max(squad.nodes_per_panel, 2 * space.degree() + 1);
      const QuadRule rule = gauss_jacobi_weighted(n, beta, hi);
      for (std::size_t i = 0; i < rule.size(); ++i) accumulate(rule.nodes[i], rule.weights[i]);
    } else {
      // g carries 1/s^2 terms; keep every piece no wider than a third of
      // its distance from s = 0 (splits the panels (h, 2h) and (2h, 3h)).
      const int pieces = (3 + p - 1) / p;
      const double width = (hi - lo) / pieces;
      for (int q = 0; q < pieces; ++q) {
        const QuadRule rule =
            gauss_legendre(squad.nodes_per_panel, lo + q * width, lo + (q + 1) * width);
        for (std::size_t i = 0; i < rule.size(); ++i)
          accumulate(rule.nodes[i], rule.weights[i] * std::pow(rule.nodes[i], beta));
      }
    }
  }
  s_mat *= 2.0 * kernel.c_gamma;
  return detail::trimmed(s_mat);
}

/// Local-limit gradient operator G with an alternating trace: the delta -> 0
/// limit of H_s (forward, trace v^+ at x_{j+1/2}) or K_s (backward, trace
/// v^- at x_{j-1/2}).
inline OperatorMatrix ldg_gradient(const DgSpace& space, SchemeVariant variant) {
  const int nm = space.modes();
  OperatorMatrix g(space.cells(), nm, 1);
  auto sign = [](int n) { return n % 2 == 0 ? 1.0 : -1.0; };
  for (int m = 0; m < nm; ++m)
    for (int l = 0; l < nm; ++l) {
      // int_{-1}^{1} P_l'(t) P_m(t) dt
      const double volume = (m < l && (l + m) % 2 == 1) ? 2.0 : 0.0;
      if (variant == SchemeVariant::forward) {
        // + (v_{j+1}(-1) - v_j(1)) w_j(1)
        g.at(0, m, l) = volume - 1.0;
        g.at(1, m, l) = sign(l);
      } else {
        // + (v_j(-1) - v_{j-1}(1)) w_j(-1)
        g.at(0, m, l) = volume + sign(l) * sign(m);
        g.at(-1, m, l) = -sign(m);
      }
    }
  return g;
}

/// Stiffness of the alternating-flux LDG scheme for -u_xx: G^T M^{-1} G.
inline OperatorMatrix ldg_stiffness(const DgSpace& space, SchemeVariant variant) {
  const OperatorMatrix g = ldg_gradient(space, variant);
  return detail::trimmed(multiply(g.transpose(), detail::inverse_mass(space), g));
}

}  // namespace nldg
