#pragma once

// Uniform periodic mesh with a modal Legendre basis of degree k per cell.
//
// Basis on cell j (midpoint x_j): phi_{j,m}(x) = P_m(2 (x - x_j) / h).
// Coefficients are stored cell-major, mode-minor: index j*(k+1) + m.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <sstream>
#include <vector>

#include "nldg/errors.hpp"
#include "nldg/quadrature.hpp"

namespace nldg {

using ScalarFunction = std::function<double(double)>;

/// Legendre values P_0..P_k at the nodes of a reference rule on (-1, 1).
struct BasisTable {
  QuadRule rule;                // on (-1, 1)
  std::vector<double> values;   // values[q * (k+1) + m] = P_m(t_q)
};

class DgSpace {
 public:
  DgSpace() = default;

  [[nodiscard]] double a() const { return a_; }
  [[nodiscard]] double b() const { return b_; }
  [[nodiscard]] int cells() const { return n_cells_; }
  [[nodiscard]] int degree() const { return k_; }
  [[nodiscard]] int modes() const { return k_ + 1; }
  [[nodiscard]] double h() const { return h_; }
  [[nodiscard]] double length() const { return b_ - a_; }
  [[nodiscard]] std::size_t dofs() const {
    return static_cast<std::size_t>(n_cells_) * static_cast<std::size_t>(k_ + 1);
  }
  [[nodiscard]] std::size_t index(int cell, int mode) const {
    return static_cast<std::size_t>(cell) * static_cast<std::size_t>(k_ + 1) +
           static_cast<std::size_t>(mode);
  }

  [[nodiscard]] double cell_left(int j) const { return a_ + j * h_; }
  [[nodiscard]] double cell_mid(int j) const { return a_ + (j + 0.5) * h_; }

  /// Diagonal of the mass operator for mode m: int_{I_j} phi_m^2 = h / (2m + 1).
  [[nodiscard]] double mass(int m) const { return h_ / (2.0 * m + 1.0); }

  /// Reference tables: Gauss points used for projections, Lobatto points
  /// (k+3 per cell) used for error norms.
  [[nodiscard]] const BasisTable& projection_table() const { return tables_->projection; }
  [[nodiscard]] const BasisTable& lobatto_table() const { return tables_->lobatto; }

  /// Periodic wrap into [a, b).
  [[nodiscard]] double wrap(double x) const {
    double r = std::fmod(x - a_, length());
    if (r < 0.0) r += length();
    if (r >= length()) r -= length();
    return a_ + r;
  }

  friend DgSpace make_space(double a, double b, int n_cells, int k);

 private:
  struct Tables {
    BasisTable projection;
    BasisTable lobatto;
  };

  double a_ = 0.0;
  double b_ = 1.0;
  int n_cells_ = 0;
  int k_ = 0;
  double h_ = 0.0;
  std::shared_ptr<const Tables> tables_;
};

namespace detail {

inline BasisTable tabulate(QuadRule rule, int k) {
  BasisTable t;
  t.values.resize(rule.size() * static_cast<std::size_t>(k + 1));
  for (std::size_t q = 0; q < rule.size(); ++q)
    for (int m = 0; m <= k; ++m) t.values[q * (k + 1) + m] = legendre(m, rule.nodes[q]);
  t.rule = std::move(rule);
  return t;
}

}  // namespace detail

inline DgSpace make_space(double a, double b, int n_cells, int k) {
  if (!(a < b)) throw DomainError("make_space: require a < b");
  if (n_cells < 2) {
    std::ostringstream os;
    os << "make_space: need at least 2 cells for periodic shifts, got " << n_cells;
    throw DomainError(os.str());
  }
  if (k < 0) throw DomainError("make_space: polynomial degree k must be >= 0");
  DgSpace s;
  s.a_ = a;
  s.b_ = b;
  s.n_cells_ = n_cells;
  s.k_ = k;
  s.h_ = (b - a) / n_cells;
  auto tables = std::make_shared<DgSpace::Tables>();
  tables->projection = detail::tabulate(gauss_legendre(std::max(k + 3, 8), -1.0, 1.0), k);
  tables->lobatto = detail::tabulate(gauss_lobatto(k + 3, -1.0, 1.0), k);
  s.tables_ = std::move(tables);
  return s;
}

/// Modal coefficients of a piecewise polynomial field on a DgSpace.
struct FieldCoeffs {
  DgSpace space;
  std::vector<double> coeffs;

  FieldCoeffs() = default;
  explicit FieldCoeffs(DgSpace sp) : space(std::move(sp)), coeffs(space.dofs(), 0.0) {}
  FieldCoeffs(DgSpace sp, std::vector<double> c) : space(std::move(sp)), coeffs(std::move(c)) {
    if (coeffs.size() != space.dofs()) throw DomainError("FieldCoeffs: coefficient count mismatch");
  }
};

/// Value of the cell-j polynomial at reference coordinate t in [-1, 1].
inline double eval_local(const DgSpace& space, std::span<const double> coeffs, int cell, double t) {
  const std::size_t base = space.index(cell, 0);
  double acc = 0.0;
  // Clenshaw would be marginally faster; k is small.
  double p_prev = 1.0;
  double p = t;
  acc += coeffs[base];
  if (space.degree() >= 1) acc += coeffs[base + 1] * t;
  for (int m = 2; m <= space.degree(); ++m) {
    const double p_next = ((2.0 * m - 1.0) * t * p - (m - 1.0) * p_prev) / m;
    p_prev = p;
    p = p_next;
    acc += coeffs[base + m] * p;
  }
  return acc;
}

/// Point value after periodic wrapping.  At an interface the cell whose
/// half-open interval [x_{j-1/2}, x_{j+1/2}) contains x is used.
inline double eval_field(const FieldCoeffs& f, double x) {
  const DgSpace& sp = f.space;
  const double xw = sp.wrap(x);
  int j = static_cast<int>(std::floor((xw - sp.a()) / sp.h()));
  j = std::clamp(j, 0, sp.cells() - 1);
  // floor may land one cell off when x sits on an interface up to roundoff
  if (xw < sp.cell_left(j) && j > 0) --j;
  if (j + 1 < sp.cells() && xw >= sp.cell_left(j + 1)) ++j;
  const double t = 2.0 * (xw - sp.cell_mid(j)) / sp.h();
  return eval_local(sp, f.coeffs, j, t);
}

/// L2 projection: c_{j,m} = (2m+1)/h int_{I_j} f phi_{j,m} dx.
inline FieldCoeffs l2_project(const DgSpace& space, const ScalarFunction& f) {
  FieldCoeffs out(space);
  const BasisTable& tab = space.projection_table();
  const int nm = space.modes();
  const double half_h = 0.5 * space.h();
  for (int j = 0; j < space.cells(); ++j) {
    const double xm = space.cell_mid(j);
    for (std::size_t q = 0; q < tab.rule.size(); ++q) {
      const double fq = f(xm + half_h * tab.rule.nodes[q]) * tab.rule.weights[q];
      for (int m = 0; m < nm; ++m) out.coeffs[space.index(j, m)] += fq * tab.values[q * nm + m];
    }
    // (2m+1)/h * (h/2) * reference integral
    for (int m = 0; m < nm; ++m) out.coeffs[space.index(j, m)] *= 0.5 * (2.0 * m + 1.0);
  }
  return out;
}

/// Load vector int_{I_j} f phi_{j,m} dx (the L2 projection multiplied by the mass operator).
inline std::vector<double> load_vector(const DgSpace& space, const ScalarFunction& f) {
  FieldCoeffs p = l2_project(space, f);
  for (int j = 0; j < space.cells(); ++j)
    for (int m = 0; m < space.modes(); ++m) p.coeffs[space.index(j, m)] *= space.mass(m);
  return std::move(p.coeffs);
}

/// Discrete L2 error with the (k+3)-point Gauss-Lobatto rule on every cell.
inline double l2_error(const FieldCoeffs& fh, const ScalarFunction& exact) {
  const DgSpace& sp = fh.space;
  const BasisTable& tab = sp.lobatto_table();
  const double half_h = 0.5 * sp.h();
  double acc = 0.0;
  for (int j = 0; j < sp.cells(); ++j) {
    const double xm = sp.cell_mid(j);
    for (std::size_t q = 0; q < tab.rule.size(); ++q) {
      const double t = tab.rule.nodes[q];
      const double e = exact(xm + half_h * t) - eval_local(sp, fh.coeffs, j, t);
      acc += half_h * tab.rule.weights[q] * e * e;
    }
  }
  return std::sqrt(acc);
}

/// Max of |exact - f_h| over the (k+3) Gauss-Lobatto nodes of every cell.
inline double linf_error(const FieldCoeffs& fh, const ScalarFunction& exact) {
  const DgSpace& sp = fh.space;
  const BasisTable& tab = sp.lobatto_table();
  const double half_h = 0.5 * sp.h();
  double worst = 0.0;
  for (int j = 0; j < sp.cells(); ++j) {
    const double xm = sp.cell_mid(j);
    for (std::size_t q = 0; q < tab.rule.size(); ++q) {
      const double t = tab.rule.nodes[q];
      worst = std::max(worst, std::abs(exact(xm + half_h * t) - eval_local(sp, fh.coeffs, j, t)));
    }
  }
  return worst;
}

/// Squared L2 norm of a coefficient vector using the diagonal mass operator.
inline double mass_norm_squared(const DgSpace& space, std::span<const double> c) {
  double acc = 0.0;
  for (int j = 0; j < space.cells(); ++j)
    for (int m = 0; m < space.modes(); ++m) {
      const double v = c[space.index(j, m)];
      acc += space.mass(m) * v * v;
    }
  return acc;
}

}  // namespace nldg
