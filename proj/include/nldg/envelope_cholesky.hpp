#pragma once

// Profile (envelope) Cholesky factorization A = L L^T.
//
// Row i of L is stored from its first structurally nonzero column first(i)
// up to the diagonal; fill-in never leaves the envelope of A.  A periodic
// banded matrix has a banded envelope except for its last rows, which reach
// back to column 0 because of the wrap-around blocks; those rows form the
// dense border of the factor.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <sstream>
#include <vector>

#include "nldg/errors.hpp"
#include "nldg/operator_matrix.hpp"

namespace nldg {

class EnvelopeCholesky {
 public:
  EnvelopeCholesky() = default;

  /// Factor a symmetric matrix given its row envelope and an entry accessor
  /// entry(i, j) for first[i] <= j <= i.
  template <class Entry>
  EnvelopeCholesky(std::vector<std::size_t> first, Entry&& entry) : first_(std::move(first)) {
    const std::size_t n = first_.size();
    start_.resize(n + 1);
    start_[0] = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (first_[i] > i) throw DomainError("EnvelopeCholesky: envelope start beyond diagonal");
      start_[i + 1] = start_[i] + (i - first_[i] + 1);
    }
    values_.assign(start_[n], 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = first_[i]; j <= i; ++j) ref(i, j) = entry(i, j);
    factor();
  }

  [[nodiscard]] std::size_t size() const { return first_.size(); }
  [[nodiscard]] std::size_t stored_entries() const { return values_.size(); }

  /// Solve A x = b in place.
  void solve_in_place(std::span<double> x) const {
    const std::size_t n = size();
    // L y = b
    for (std::size_t i = 0; i < n; ++i) {
      const double* row = values_.data() + start_[i];
      double acc = x[i];
      for (std::size_t j = first_[i]; j < i; ++j) acc -= row[j - first_[i]] * x[j];
      x[i] = acc / row[i - first_[i]];
    }
    // L^T x = y, column-oriented over the stored rows
    for (std::size_t ii = n; ii-- > 0;) {
      const double* row = values_.data() + start_[ii];
      x[ii] /= row[ii - first_[ii]];
      const double xi = x[ii];
      for (std::size_t j = first_[ii]; j < ii; ++j) x[j] -= row[j - first_[ii]] * xi;
    }
  }

  [[nodiscard]] double factor_entry(std::size_t i, std::size_t j) const {
    if (j > i || j < first_[i]) return 0.0;
    return values_[start_[i] + (j - first_[i])];
  }

 private:
  double& ref(std::size_t i, std::size_t j) { return values_[start_[i] + (j - first_[i])]; }

  void factor() {
    const std::size_t n = size();
    for (std::size_t i = 0; i < n; ++i) {
      double* li = values_.data() + start_[i];
      const std::size_t fi = first_[i];
      for (std::size_t j = fi; j < i; ++j) {
        const double* lj = values_.data() + start_[j];
        const std::size_t fj = first_[j];
        const std::size_t lo = std::max(fi, fj);
        double acc = li[j - fi];
        for (std::size_t k = lo; k < j; ++k) acc -= li[k - fi] * lj[k - fj];
        li[j - fi] = acc / lj[j - fj];
      }
      double diag = li[i - fi];
      for (std::size_t k = fi; k < i; ++k) diag -= li[k - fi] * li[k - fi];
      if (!(diag > 0.0)) {
        std::ostringstream os;
        os << "EnvelopeCholesky: matrix is not positive definite (pivot " << i << " = " << diag
           << ")";
        throw NumericalError(os.str());
      }
      li[i - fi] = std::sqrt(diag);
    }
  }

  std::vector<std::size_t> first_;
  std::vector<std::size_t> start_;
  std::vector<double> values_;
};

/// Row envelope of a block-circulant operator with half band w: a row in cell
/// c reaches back to cell max(c - w, 0), or to column 0 when its band wraps
/// past cell N-1.
inline std::vector<std::size_t> periodic_envelope(const OperatorMatrix& a) {
  const int n_cells = a.cells();
  const int w = std::min(a.half_band(), n_cells - 1);
  const auto nm = static_cast<std::size_t>(a.modes());
  std::vector<std::size_t> first(a.dim());
  for (int c = 0; c < n_cells; ++c) {
    const std::size_t f = (c + w >= n_cells) ? 0 : static_cast<std::size_t>(std::max(c - w, 0)) * nm;
    for (std::size_t m = 0; m < nm; ++m) first[c * nm + m] = f;
  }
  return first;
}

/// Factor a symmetric block-circulant operator.
inline EnvelopeCholesky factor_periodic(const OperatorMatrix& a) {
  const int nm = a.modes();
  const int w = a.half_band();
  return EnvelopeCholesky(periodic_envelope(a), [&](std::size_t i, std::size_t j) {
    const int ci = static_cast<int>(i) / nm;
    const int ri = static_cast<int>(i) % nm;
    const int cj = static_cast<int>(j) / nm;
    const int rj = static_cast<int>(j) % nm;
    // sum every stored offset that lands on cell cj (aliases included)
    double v = 0.0;
    for (int d = -w; d <= w; ++d)
      if (a.wrap_cell(ci + d) == cj) v += a.at(d, ri, rj);
    return v;
  });
}

}  // namespace nldg
