// Acceptance gate: one PASS/FAIL line per criterion, exit status 0 only if
// every criterion passes.  Tolerances are fixed here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <Eigen/Dense>

#include "nldg/cn_integrator.hpp"
#include "nldg/identities.hpp"
#include "nldg/nonlocal_assembly.hpp"
#include "nldg/stiffness_oracle.hpp"
#include "nldg/studies.hpp"

using namespace nldg;

namespace {

constexpr double kTableRelTol = 0.02;
constexpr double kTableOrderTol = 0.05;
constexpr double kCrossRegimeTol = 0.01;
constexpr double kDriftK5Integrable = 1e-10;
constexpr double kDriftK5NonIntegrable = 1e-9;
constexpr double kLimitOrderTol = 0.2;
constexpr double kLimitFirstRowTol = 0.10;
constexpr double kSkewTol = 1e-12;
constexpr double kQuadraticTol = 1e-11;
constexpr double kClosedFormTol = 1e-12;
constexpr double kOracleTol = 1e-9;
constexpr double kLdgGapTol = 1e-3;
constexpr double kSymTol = 1e-12;
constexpr double kPsdTol = 1e-10;
constexpr double kNullTol = 1e-11;

struct Outcome {
  bool pass;
  std::string detail;
};

// Reference L2 errors by (k, N); identical across alpha except where noted.
const std::map<std::pair<int, int>, double> kPrintedErrors{
    {{0, 10}, 1.2721e-01}, {{0, 20}, 6.3996e-02}, {{0, 40}, 3.2047e-02},
    {{1, 10}, 1.0335e-02}, {{1, 20}, 2.5966e-03}, {{1, 40}, 6.4995e-04},
    {{2, 10}, 5.4954e-04}, {{2, 20}, 6.8965e-05}, {{2, 40}, 8.6292e-06}};
const std::map<std::pair<int, int>, double> kPrintedOrders{
    {{0, 20}, 0.9911}, {{0, 40}, 0.9978}, {{1, 20}, 1.9929},
    {{1, 40}, 1.9982}, {{2, 20}, 2.9943}, {{2, 40}, 2.9986}};
// alpha = 5/2, delta = 0.2, k = 2 deviates slightly in the last digits
const std::map<int, double> kPrintedAlpha25K2Errors{{10, 5.4957e-04}, {20, 6.8979e-05}, {40, 8.6308e-06}};
const std::map<int, double> kPrintedAlpha25K2Orders{{20, 2.9941}, {40, 2.9986}};

const std::vector<double> kAlphas{0.25, 0.5, 1.5, 2.5};

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4e", v);
  return buf;
}

std::string fix(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

// Worst structural defects over every operator checked in this run.
struct StructureLedger {
  int instances = 0;
  double worst_sym = 0.0;   // relative
  double worst_psd = 0.0;   // -min eig / ||S||, clipped at 0
  double worst_null = 0.0;  // max |S 1|
  double worst_null_rel = 0.0;
  std::string worst_null_case;

  void check(const OperatorMatrix& s) {
    const Eigen::MatrixXd d = s.to_dense();
    const double norm = d.cwiseAbs().maxCoeff();
    worst_sym = std::max(worst_sym, (d - d.transpose()).cwiseAbs().maxCoeff() / norm);
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (d + d.transpose()),
                                                             Eigen::EigenvaluesOnly);
    worst_psd = std::max(worst_psd, -eig.eigenvalues().minCoeff() / norm);
    const DgSpace sp = make_space(0.0, 1.0, s.cells(), s.modes() - 1);
    const FieldCoeffs one = l2_project(sp, [](double) { return 1.0; });
    double null = 0.0;
    for (double v : s.apply(one.coeffs)) null = std::max(null, std::abs(v));
    if (null > worst_null) {
      worst_null = null;
      worst_null_rel = null / norm;
      worst_null_case = "N=" + std::to_string(s.cells()) + " k=" + std::to_string(s.modes() - 1);
    }
    ++instances;
  }
};

StructureLedger g_structure;

StudyConfig table_config(DeltaSpec delta) {
  StudyConfig c;
  c.kind = StudyKind::converge;
  c.alphas = kAlphas;
  c.delta = std::move(delta);
  c.degrees = {0, 1, 2};
  c.cells = {10, 20, 40};
  c.dt = 2e-5;
  c.t_final = 1.0;
  c.threads = default_threads();
  return c;
}

using ErrorKey = std::tuple<double, int, int>;  // alpha, k, N

std::map<ErrorKey, const ErrorRow*> index_rows(const ErrorTable& t) {
  std::map<ErrorKey, const ErrorRow*> out;
  for (const ErrorRow& r : t.rows) out[{r.alpha, r.k, r.cells}] = &r;
  return out;
}

// Compare a table with the printed values; returns worst relative error and order gap.
Outcome compare_with_printed(const ErrorTable& t, bool fixed_02) {
  double worst_rel = 0.0, worst_order = 0.0;
  std::string worst_case;
  for (const ErrorRow& r : t.rows) {
    const bool special = fixed_02 && r.alpha == 2.5 && r.k == 2;
    const double printed = special ? kPrintedAlpha25K2Errors.at(r.cells) : kPrintedErrors.at({r.k, r.cells});
    const double rel = std::abs(r.error - printed) / printed;
    if (rel > worst_rel) {
      worst_rel = rel;
      worst_case = "alpha=" + fix(r.alpha) + " k=" + std::to_string(r.k) + " N=" + std::to_string(r.cells);
    }
    if (r.order) {
      const double po = special ? kPrintedAlpha25K2Orders.at(r.cells) : kPrintedOrders.at({r.k, r.cells});
      worst_order = std::max(worst_order, std::abs(*r.order - po));
    }
  }
  const bool pass = t.rows.size() == 36 && worst_rel <= kTableRelTol && worst_order <= kTableOrderTol;
  return {pass, "max rel err " + sci(worst_rel) + " (" + worst_case + "), max order gap " +
                    sci(worst_order)};
}

Outcome criterion_fixed_delta(ErrorTable& fixed02) {
  fixed02 = run_convergence(table_config({DeltaSpec::Mode::absolute, {0.2}}));
  const Outcome o = compare_with_printed(fixed02, true);
  const auto idx = index_rows(fixed02);
  return {o.pass, o.detail + "; k=2 N=40 alpha=1/2 e_u=" + sci(idx.at({0.5, 2, 40})->error)};
}

Outcome criterion_scaled_delta(const ErrorTable& fixed02) {
  const ErrorTable mult1 = run_convergence(table_config({DeltaSpec::Mode::multiple_of_h, {1.0}}));
  const ErrorTable mult3 = run_convergence(table_config({DeltaSpec::Mode::multiple_of_h, {3.0}}));
  const ErrorTable tiny = run_convergence(table_config({DeltaSpec::Mode::absolute, {1e-5}}));
  const Outcome a = compare_with_printed(mult1, false);
  const Outcome b = compare_with_printed(mult3, false);
  const auto i1 = index_rows(mult1), i3 = index_rows(mult3), i0 = index_rows(tiny), i2 = index_rows(fixed02);
  double worst_spread = 0.0;
  for (const auto& [key, row] : i0) {
    const double vals[] = {row->error, i1.at(key)->error, i2.at(key)->error, i3.at(key)->error};
    const double lo = *std::min_element(std::begin(vals), std::end(vals));
    const double hi = *std::max_element(std::begin(vals), std::end(vals));
    worst_spread = std::max(worst_spread, hi / lo - 1.0);
  }
  const bool pass = a.pass && b.pass && worst_spread <= kCrossRegimeTol;
  return {pass, "delta=h: " + a.detail + "; delta=3h: " + b.detail + "; cross-regime spread " +
                    sci(worst_spread)};
}

double energy_drift(double alpha, int k) {
  const DgSpace sp = make_space(0.0, 1.0, 80, k);
  OperatorMatrix s = stiffness_matrix(sp, make_kernel(alpha, 2.0 * sp.h()));
  if (k == 5) g_structure.check(s);
  CnState st = init_state(sp, std::move(s), [](double x) { return std::sin(2.0 * std::numbers::pi * x); },
                          [](double) { return 0.0; }, Forcing{}, 0.1);
  return max_relative_drift(solve_to(std::move(st), 100.0, 1).energy);
}

Outcome criterion_energy() {
  const double a5 = energy_drift(2.0 / 3.0, 5), a6 = energy_drift(2.0 / 3.0, 6);
  const double b5 = energy_drift(1.5, 5), b6 = energy_drift(1.5, 6);
  const bool pass = a5 <= kDriftK5Integrable && b5 <= kDriftK5NonIntegrable && a6 <= a5 && b6 <= b5;
  return {pass, "drift alpha=2/3: k5 " + sci(a5) + " k6 " + sci(a6) + "; alpha=3/2: k5 " + sci(b5) +
                    " k6 " + sci(b6)};
}

Outcome criterion_limit() {
  StudyConfig c;
  c.kind = StudyKind::limit;
  c.alphas = {0.5, 1.5};
  c.degrees = {2};
  c.cells = {40};
  c.dt = 0.01;
  c.t_final = 100.0;
  c.delta = {DeltaSpec::Mode::absolute, {0.5e-2, 0.25e-2, 0.125e-2, 0.0625e-2}};
  c.threads = default_threads();
  const ErrorTable t = run_delta_limit(c);
  const double printed_first[] = {1.4586e-1, 5.8714e-2};
  if (t.rows.size() != 8) return {false, "expected 8 rows, got " + std::to_string(t.rows.size())};
  bool pass = true;
  std::ostringstream os;
  for (std::size_t a = 0; a < 2; ++a) {
    os << (a ? "; " : "") << "alpha=" << fix(c.alphas[a]) << ": linf";
    for (std::size_t d = 0; d < 4; ++d) os << ' ' << sci(t.rows[4 * a + d].error);
    os << " orders";
    for (std::size_t d = 1; d < 4; ++d) {
      const double o = *t.rows[4 * a + d].order;
      os << ' ' << fix(o);
      pass = pass && std::abs(o - 2.0) <= kLimitOrderTol;
    }
    const double rel = std::abs(t.rows[4 * a].error - printed_first[a]) / printed_first[a];
    os << " first-row rel gap " << sci(rel);
    pass = pass && rel <= kLimitFirstRowTol;
  }
  return {pass, os.str()};
}

Outcome criterion_identities() {
  const auto t0 = std::chrono::steady_clock::now();
  const IdentityReport rep = run_identity_suite(50);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool pass = rep.cases == 50 && rep.max_skew <= kSkewTol && rep.max_quadratic <= kQuadraticTol;
  return {pass, std::to_string(rep.cases) + " cases, max |K+H^T| " + sci(rep.max_skew) +
                    ", max quadratic-form rel gap " + sci(rep.max_quadratic) + ", " + fix(secs) + " s"};
}

Outcome criterion_closed_form() {
  double worst = 0.0;
  for (double alpha : kAlphas)
    for (double ratio : {1.0, 0.5, 0.1}) {
      worst = std::max(worst, k0_closed_form_gap(alpha, ratio));
      const DgSpace sp = make_space(0.0, 1.0, 10, 0);
      g_structure.check(stiffness_matrix(sp, make_kernel(alpha, ratio * sp.h())));
    }
  return {worst <= kClosedFormTol, "max gap " + sci(worst)};
}

Outcome criterion_oracle() {
  const DgSpace sp = make_space(0.0, 1.0, 4, 1);
  double worst = 0.0;
  for (double alpha : {0.5, 1.5})
    for (double ratio : {0.5, 1.5, 2.5}) {
      const KernelSpec ker = make_kernel(alpha, ratio * sp.h());
      // delta = 2.5h exceeds the banded-solver guard at N = 4; the circulant
      // representation with aliased offsets is still exact
      const OperatorMatrix s = stiffness_matrix(sp, ker, {}, SchemeVariant::forward, WrapPolicy::alias);
      g_structure.check(s);
      const Eigen::MatrixXd o = dense_stiffness_oracle(sp, ker, 1e-11);
      worst = std::max(worst, (s.to_dense() - o).cwiseAbs().maxCoeff());
    }
  return {worst <= kOracleTol, "6 cases, max entrywise gap " + sci(worst)};
}

Outcome criterion_ldg() {
  double worst = 0.0;
  for (int k = 0; k <= 2; ++k)
    for (SchemeVariant v : {SchemeVariant::forward, SchemeVariant::backward})
      for (double alpha : {0.5, 1.5}) {
        const DgSpace sp = make_space(0.0, 1.0, 10, k);
        const OperatorMatrix ldg = ldg_stiffness(sp, v);
        const OperatorMatrix s = stiffness_matrix(sp, make_kernel(alpha, 1e-4 * sp.h()), {}, v);
        g_structure.check(s);
        g_structure.check(ldg);
        const Eigen::MatrixXd ref = ldg.to_dense();
        worst = std::max(worst, (s.to_dense() - ref).cwiseAbs().maxCoeff() / ref.cwiseAbs().maxCoeff());
      }
  return {worst <= kLdgGapTol, "max relative gap " + sci(worst)};
}

Outcome criterion_structure() {
  // table operators in every regime, plus everything checked above
  for (double alpha : kAlphas)
    for (int k = 0; k <= 2; ++k)
      for (int n : {10, 20, 40}) {
        const DgSpace sp = make_space(0.0, 1.0, n, k);
        for (double delta : {1e-5, 0.2, sp.h(), 3.0 * sp.h()})
          for (SchemeVariant v : {SchemeVariant::forward, SchemeVariant::backward})
            g_structure.check(stiffness_matrix(sp, make_kernel(alpha, delta), {}, v));
      }
  const bool pass = g_structure.worst_sym <= kSymTol && g_structure.worst_psd <= kPsdTol &&
                    g_structure.worst_null <= kNullTol;
  return {pass, std::to_string(g_structure.instances) + " operators, max rel asymmetry " +
                    sci(g_structure.worst_sym) + ", min eig/||S|| " + sci(-g_structure.worst_psd) +
                    ", max |S 1| " + sci(g_structure.worst_null) + " (" + g_structure.worst_null_case +
                    ", rel " + sci(g_structure.worst_null_rel) + ")"};
}

}  // namespace

int main() {
  ErrorTable fixed02;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"reference errors, fixed delta=0.2", [&] { return criterion_fixed_delta(fixed02); }},
      {"reference errors, delta=h and 3h, cross-regime agreement", [&] { return criterion_scaled_delta(fixed02); }},
      {"energy conservation (N=80, delta=2h, dt=0.1, T=100)", criterion_energy},
      {"vanishing-horizon limit (k=2, h=0.025, dt=0.01, T=100)", criterion_limit},
      {"operator identity suite", criterion_identities},
      {"k=0 closed-form stiffness", criterion_closed_form},
      {"oracle equivalence (N=4, k=1)", criterion_oracle},
      {"local LDG limit (delta=1e-4 h)", criterion_ldg},
      {"structural invariants of S", criterion_structure},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    failures += o.pass ? 0 : 1;
    std::printf("%s %zu %s: %s [%.1f s]\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
