#pragma once

// Radial power-law kernel gamma(s) = c_gamma |s|^(-alpha) on (-delta, delta),
// normalized so that its second moment is one.

#include <cmath>
#include <numbers>
#include <sstream>

#include "nldg/errors.hpp"

namespace nldg {

struct KernelSpec {
  double alpha = 0.5;
  double delta = 0.1;
  double c_gamma = 0.0;

  [[nodiscard]] double operator()(double s) const { return c_gamma * std::pow(std::abs(s), -alpha); }
};

inline KernelSpec make_kernel(double alpha, double delta) {
  if (!(alpha > 0.0 && alpha < 3.0)) {
    std::ostringstream os;
    os << "kernel exponent alpha must satisfy 0 < alpha < 3, got " << alpha;
    throw DomainError(os.str());
  }
  if (!(delta > 0.0)) {
    std::ostringstream os;
    os << "horizon delta must be > 0, got " << delta;
    throw DomainError(os.str());
  }
  KernelSpec k;
  k.alpha = alpha;
  k.delta = delta;
  k.c_gamma = (3.0 - alpha) / (2.0 * std::pow(delta, 3.0 - alpha));
  return k;
}

/// int_{-delta}^{delta} s^p gamma(s) ds for even p >= 2, from the closed-form
/// antiderivative: (3 - alpha) delta^(p-2) / (p + 1 - alpha).
inline double kernel_moment(const KernelSpec& kernel, int p) {
  if (p < 2 || p % 2 != 0) throw DomainError("kernel_moment: p must be an even integer >= 2");
  return (3.0 - kernel.alpha) * std::pow(kernel.delta, p - 2) / (p + 1.0 - kernel.alpha);
}

/// c = 2 int_{-delta}^{delta} gamma(s) (cos(2 pi s) - 1) ds, summed from the
/// Taylor series of cos.  L_delta sin(2 pi x) = -c sin(2 pi x).
inline double forcing_coefficient(const KernelSpec& kernel) {
  constexpr int kMaxTerms = 60;
  constexpr double kRelTol = 1e-15;
  const double two_pi = 2.0 * std::numbers::pi;
  const double a = kernel.alpha;
  const double d = kernel.delta;

  // term_n = (-1)^n (2 pi)^(2n) d^(2n+1-a) / ((2n)! (2n+1-a)); the ratio of
  // the n-independent parts is carried incrementally.
  double factor = std::pow(d, 1.0 - a);  // (2pi d)^(2n) / (2n)! * d^(1-a), n = 0
  double sum = 0.0;
  for (int n = 1; n <= kMaxTerms; ++n) {
    factor *= -(two_pi * d) * (two_pi * d) / ((2.0 * n - 1.0) * (2.0 * n));
    const double term = factor / (2.0 * n + 1.0 - a);
    sum += term;
    if (std::abs(term) < kRelTol * std::abs(sum)) break;
  }
  return 4.0 * kernel.c_gamma * sum;
}

}  // namespace nldg
