#pragma once

// Block-circulant operators on a uniform periodic DG space.
//
// On a uniform periodic mesh every translation-invariant operator is block
// circulant: (A v)_j = sum_d A_d v_{(j+d) mod N}, with (k+1)x(k+1) blocks A_d
// for offsets d in [-w, w].  Rows of a block index the test function, columns
// the trial function.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <ostream>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "nldg/dg_space.hpp"
#include "nldg/errors.hpp"

namespace nldg {

class OperatorMatrix {
 public:
  OperatorMatrix() = default;

  /// Zero operator with offsets -half_band..half_band.
  OperatorMatrix(int cells, int modes, int half_band)
      : cells_(cells), modes_(modes), half_band_(half_band),
        blocks_(static_cast<std::size_t>(2 * half_band + 1) * modes * modes, 0.0) {
    if (half_band < 0) throw DomainError("OperatorMatrix: negative band");
  }

  [[nodiscard]] int cells() const { return cells_; }
  [[nodiscard]] int modes() const { return modes_; }
  [[nodiscard]] int half_band() const { return half_band_; }
  [[nodiscard]] std::size_t dim() const {
    return static_cast<std::size_t>(cells_) * static_cast<std::size_t>(modes_);
  }

  /// Entry (row mode r, column mode c) of the block at cell offset d.
  [[nodiscard]] double& at(int d, int r, int c) { return blocks_[offset(d, r, c)]; }
  [[nodiscard]] double at(int d, int r, int c) const { return blocks_[offset(d, r, c)]; }

  /// Widen the stored band, padding with zero blocks.
  [[nodiscard]] OperatorMatrix widened(int half_band) const {
    OperatorMatrix out(cells_, modes_, std::max(half_band, half_band_));
    for (int d = -half_band_; d <= half_band_; ++d)
      for (int r = 0; r < modes_; ++r)
        for (int c = 0; c < modes_; ++c) out.at(d, r, c) = at(d, r, c);
    return out;
  }

  OperatorMatrix& operator+=(const OperatorMatrix& o) {
    check_compatible(o);
    if (o.half_band_ > half_band_) *this = widened(o.half_band_);
    for (int d = -o.half_band_; d <= o.half_band_; ++d)
      for (int r = 0; r < modes_; ++r)
        for (int c = 0; c < modes_; ++c) at(d, r, c) += o.at(d, r, c);
    return *this;
  }

  /// this += scale * o
  void add_scaled(const OperatorMatrix& o, double scale) {
    check_compatible(o);
    if (o.half_band_ > half_band_) *this = widened(o.half_band_);
    for (int d = -o.half_band_; d <= o.half_band_; ++d)
      for (int r = 0; r < modes_; ++r)
        for (int c = 0; c < modes_; ++c) at(d, r, c) += scale * o.at(d, r, c);
  }

  OperatorMatrix& operator*=(double s) {
    for (double& v : blocks_) v *= s;
    return *this;
  }

  [[nodiscard]] OperatorMatrix transpose() const {
    OperatorMatrix out(cells_, modes_, half_band_);
    for (int d = -half_band_; d <= half_band_; ++d)
      for (int r = 0; r < modes_; ++r)
        for (int c = 0; c < modes_; ++c) out.at(-d, c, r) = at(d, r, c);
    return out;
  }

  /// y = A x
  void apply(std::span<const double> x, std::span<double> y) const {
    const int nm = modes_;
    for (int j = 0; j < cells_; ++j) {
      double* yj = y.data() + static_cast<std::size_t>(j) * nm;
      std::fill(yj, yj + nm, 0.0);
      for (int d = -half_band_; d <= half_band_; ++d) {
        const int col_cell = wrap_cell(j + d);
        const double* xc = x.data() + static_cast<std::size_t>(col_cell) * nm;
        const double* blk = blocks_.data() + offset(d, 0, 0);
        for (int r = 0; r < nm; ++r) {
          double acc = 0.0;
          for (int c = 0; c < nm; ++c) acc += blk[r * nm + c] * xc[c];
          yj[r] += acc;
        }
      }
    }
  }

  [[nodiscard]] std::vector<double> apply(std::span<const double> x) const {
    std::vector<double> y(dim());
    apply(x, y);
    return y;
  }

  /// x^T A x
  [[nodiscard]] double quadratic_form(std::span<const double> x) const {
    const std::vector<double> y = apply(x);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) acc += x[i] * y[i];
    return acc;
  }

  /// Dense matrix; offsets aliasing modulo N are summed.
  [[nodiscard]] Eigen::MatrixXd to_dense() const {
    const auto n = static_cast<Eigen::Index>(dim());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (int j = 0; j < cells_; ++j)
      for (int d = -half_band_; d <= half_band_; ++d) {
        const int cc = wrap_cell(j + d);
        for (int r = 0; r < modes_; ++r)
          for (int c = 0; c < modes_; ++c) m(j * modes_ + r, cc * modes_ + c) += at(d, r, c);
      }
    return m;
  }

  [[nodiscard]] double max_abs() const {
    double m = 0.0;
    for (double v : blocks_) m = std::max(m, std::abs(v));
    return m;
  }

  /// Highest |d| whose block is not identically zero.
  [[nodiscard]] int effective_half_band() const {
    for (int d = half_band_; d > 0; --d)
      for (int r = 0; r < modes_; ++r)
        for (int c = 0; c < modes_; ++c)
          if (at(d, r, c) != 0.0 || at(-d, r, c) != 0.0) return d;
    return 0;
  }

  [[nodiscard]] int wrap_cell(int j) const {
    const int r = j % cells_;
    return r < 0 ? r + cells_ : r;
  }

 private:
  [[nodiscard]] std::size_t offset(int d, int r, int c) const {
    return (static_cast<std::size_t>(d + half_band_) * modes_ + r) * modes_ + c;
  }
  void check_compatible(const OperatorMatrix& o) const {
    if (o.cells_ != cells_ || o.modes_ != modes_)
      throw DomainError("OperatorMatrix: incompatible operand shapes");
  }

  int cells_ = 0;
  int modes_ = 0;
  int half_band_ = 0;
  std::vector<double> blocks_;
};

/// A * diag(scale per mode) * B, i.e. A M^{-1} B when scale = 1/mass.
inline OperatorMatrix multiply(const OperatorMatrix& a, std::span<const double> mode_scale,
                               const OperatorMatrix& b) {
  if (a.cells() != b.cells() || a.modes() != b.modes())
    throw DomainError("multiply: incompatible operand shapes");
  const int nm = a.modes();
  OperatorMatrix out(a.cells(), nm, a.half_band() + b.half_band());
  for (int da = -a.half_band(); da <= a.half_band(); ++da)
    for (int db = -b.half_band(); db <= b.half_band(); ++db)
      for (int r = 0; r < nm; ++r)
        for (int c = 0; c < nm; ++c) {
          double acc = 0.0;
          for (int i = 0; i < nm; ++i) acc += a.at(da, r, i) * mode_scale[i] * b.at(db, i, c);
          out.at(da + db, r, c) += acc;
        }
  return out;
}

/// Plain-text triplet dump: header line then `row col value` per nonzero.
inline void write_triplets(const OperatorMatrix& m, std::ostream& os) {
  const Eigen::MatrixXd d = m.to_dense();
  os << "# nldg-matrix dim=" << m.dim() << " band=" << m.half_band() << '\n';
  const auto old_prec = os.precision(17);
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    for (Eigen::Index j = 0; j < d.cols(); ++j)
      if (d(i, j) != 0.0) os << i << ' ' << j << ' ' << d(i, j) << '\n';
  os.precision(old_prec);
}

}  // namespace nldg
