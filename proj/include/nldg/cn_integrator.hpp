#pragma once

// Three-level Crank-Nicolson scheme for M u'' + S u = F:
//
//   M (u^{n+1} - 2u^n + u^{n-1}) / h_t^2 + S (u^{n+1} + u^{n-1}) / 2 = F^n
//
// with F^n = (F(t_{n+1}) + F(t_{n-1})) / 2.  The implicit operator
// A = M/h_t^2 + S/2 is factored once and reused for every step.

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <utility>
#include <vector>

#include "nldg/dg_space.hpp"
#include "nldg/envelope_cholesky.hpp"
#include "nldg/errors.hpp"
#include "nldg/operator_matrix.hpp"

namespace nldg {

using Forcing = std::function<double(double x, double t)>;

/// Operators shared by every state of one run.
struct CnSystem {
  DgSpace space;
  OperatorMatrix stiffness;
  double dt = 0.0;
  EnvelopeCholesky factor;  // of M/dt^2 + S/2
  Forcing forcing;          // empty when unforced
};

struct EnergySample {
  long step = 0;
  double energy = 0.0;
};

class CnState {
 public:
  CnState() = default;
  CnState(std::shared_ptr<const CnSystem> sys, FieldCoeffs prev, FieldCoeffs curr, long step)
      : sys_(std::move(sys)), prev_(std::move(prev)), curr_(std::move(curr)), step_(step) {}

  [[nodiscard]] const FieldCoeffs& previous() const { return prev_; }
  [[nodiscard]] const FieldCoeffs& current() const { return curr_; }
  [[nodiscard]] long step() const { return step_; }
  [[nodiscard]] double dt() const { return sys_->dt; }
  [[nodiscard]] double time() const { return static_cast<double>(step_) * sys_->dt; }
  [[nodiscard]] const CnSystem& system() const { return *sys_; }
  [[nodiscard]] std::shared_ptr<const CnSystem> system_ptr() const { return sys_; }

  /// Same system, levels exchanged: the backward-in-time state.
  [[nodiscard]] CnState reversed() const { return CnState(sys_, curr_, prev_, step_); }

  friend CnState cn_step(const CnState& state);

 private:
  std::shared_ptr<const CnSystem> sys_;
  FieldCoeffs prev_;
  FieldCoeffs curr_;
  long step_ = 0;
  // loads at t_{n-1} and t_n, carried so each F(t) is projected once
  std::optional<std::vector<double>> load_prev_;
  std::optional<std::vector<double>> load_curr_;
};

namespace detail {

inline std::vector<double> forcing_load(const CnSystem& sys, double t) {
  if (!sys.forcing) return std::vector<double>(sys.space.dofs(), 0.0);
  return load_vector(sys.space, [&](double x) { return sys.forcing(x, t); });
}

inline OperatorMatrix implicit_operator(const DgSpace& space, const OperatorMatrix& s, double dt) {
  OperatorMatrix a = s;
  a *= 0.5;
  for (int m = 0; m < space.modes(); ++m) a.at(0, m, m) += space.mass(m) / (dt * dt);
  return a;
}

}  // namespace detail

/// Build the shared system and the first two levels.
///
/// u^0 = P_h u0; u^1 = u^0 + dt P_h u1 + dt^2/2 M^{-1} (F^0 - S u^0), a
/// second-order Taylor start consistent with u'' = M^{-1}(F - S u).
inline CnState init_state(const DgSpace& space, OperatorMatrix stiffness, const ScalarFunction& u0,
                          const ScalarFunction& u1, Forcing forcing, double dt) {
  if (!(dt > 0.0)) throw ConfigError("time step must be > 0");
  if (stiffness.dim() != space.dofs()) throw DomainError("init_state: stiffness/space mismatch");
  auto sys = std::make_shared<CnSystem>();
  sys->space = space;
  sys->dt = dt;
  sys->forcing = std::move(forcing);
  sys->factor = factor_periodic(detail::implicit_operator(space, stiffness, dt));
  sys->stiffness = std::move(stiffness);

  FieldCoeffs first = l2_project(space, u0);
  FieldCoeffs velocity = l2_project(space, u1);
  const std::vector<double> su = sys->stiffness.apply(first.coeffs);
  const std::vector<double> f0 = detail::forcing_load(*sys, 0.0);
  FieldCoeffs second(space);
  for (int j = 0; j < space.cells(); ++j)
    for (int m = 0; m < space.modes(); ++m) {
      const std::size_t i = space.index(j, m);
      second.coeffs[i] = first.coeffs[i] + dt * velocity.coeffs[i] +
                         0.5 * dt * dt * (f0[i] - su[i]) / space.mass(m);
    }
  return CnState(std::move(sys), std::move(first), std::move(second), 1);
}

/// Advance one step: solve (M/dt^2 + S/2) u^{n+1} = 2/dt^2 M u^n - (M/dt^2 + S/2) u^{n-1} + F^n.
inline CnState cn_step(const CnState& state) {
  const CnSystem& sys = *state.sys_;
  const DgSpace& sp = sys.space;
  const double dt = sys.dt;
  const double inv_dt2 = 1.0 / (dt * dt);
  const long n = state.step_;

  std::vector<double> load_prev = state.load_prev_ ? *state.load_prev_
                                                   : detail::forcing_load(sys, (n - 1) * dt);
  std::vector<double> load_curr = state.load_curr_ ? *state.load_curr_
                                                   : detail::forcing_load(sys, n * dt);
  std::vector<double> load_next = detail::forcing_load(sys, (n + 1) * dt);

  const std::vector<double>& up = state.prev_.coeffs;
  const std::vector<double>& uc = state.curr_.coeffs;
  std::vector<double> rhs = sys.stiffness.apply(up);
  for (int j = 0; j < sp.cells(); ++j)
    for (int m = 0; m < sp.modes(); ++m) {
      const std::size_t i = sp.index(j, m);
      const double mass = sp.mass(m) * inv_dt2;
      rhs[i] = 2.0 * mass * uc[i] - (mass * up[i] + 0.5 * rhs[i]) +
               0.5 * (load_next[i] + load_prev[i]);
    }
  sys.factor.solve_in_place(rhs);

  CnState next(state.sys_, state.curr_, FieldCoeffs(sp, std::move(rhs)), n + 1);
  if (sys.forcing) {
    next.load_prev_ = std::move(load_curr);
    next.load_curr_ = std::move(load_next);
  }
  return next;
}

/// E^n = ||(u^n - u^{n-1})/dt||^2 + (u^n' S u^n + u^{n-1}' S u^{n-1}) / 2,
/// the Crank-Nicolson invariant of the unforced scheme.
inline EnergySample discrete_energy(const CnState& state) {
  const CnSystem& sys = state.system();
  const auto& uc = state.current().coeffs;
  const auto& up = state.previous().coeffs;
  std::vector<double> diff(uc.size());
  for (std::size_t i = 0; i < uc.size(); ++i) diff[i] = (uc[i] - up[i]) / sys.dt;
  const double kinetic = mass_norm_squared(sys.space, diff);
  const double potential =
      0.5 * (sys.stiffness.quadratic_form(uc) + sys.stiffness.quadratic_form(up));
  return {state.step(), kinetic + potential};
}

struct SolveResult {
  CnState state;
  std::vector<EnergySample> energy;
};

/// Number of steps for horizon T; throws unless T is an integer multiple of dt.
inline long step_count(double t_final, double dt) {
  if (!(dt > 0.0) || !(t_final > 0.0)) throw ConfigError("T and dt must be positive");
  const double ratio = t_final / dt;
  const long n = std::lround(ratio);
  if (n < 1 || std::abs(ratio - static_cast<double>(n)) > 1e-8 * std::max(1.0, ratio)) {
    std::ostringstream os;
    os << "T=" << t_final << " is not an integer multiple of dt=" << dt;
    throw ConfigError(os.str());
  }
  return n;
}

/// March to t = T (u^1 counts as the first step).  Energy is sampled at the
/// starting level, every `energy_every` steps, and at the final step;
/// energy_every <= 0 disables sampling.
inline SolveResult solve_to(CnState state, double t_final, int energy_every) {
  const long n_steps = step_count(t_final, state.dt());
  if (state.step() > n_steps) throw ConfigError("solve_to: state is already past T");
  SolveResult out;
  auto sample = [&](const CnState& s) {
    if (energy_every <= 0) return;
    if (s.step() == 1 || s.step() % energy_every == 0 || s.step() == n_steps)
      out.energy.push_back(discrete_energy(s));
  };
  sample(state);
  while (state.step() < n_steps) {
    state = cn_step(state);
    sample(state);
  }
  out.state = std::move(state);
  return out;
}

/// Largest |E^n - E^1| / E^1 over a trace (0 for an identically zero trace).
inline double max_relative_drift(std::span<const EnergySample> trace) {
  if (trace.empty()) return 0.0;
  const double e0 = trace.front().energy;
  double worst = 0.0;
  for (const EnergySample& s : trace) {
    const double d = std::abs(s.energy - e0);
    worst = std::max(worst, e0 > 0.0 ? d / e0 : d);
  }
  return worst;
}

}  // namespace nldg
