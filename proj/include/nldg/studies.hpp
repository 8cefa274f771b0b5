#pragma once

// Experiment drivers: manufactured-solution convergence tables, energy
// traces of the unforced problem, and the vanishing-horizon study.  Each
// driver returns its table and can write it as CSV.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <istream>
#include <limits>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "nldg/cn_integrator.hpp"
#include "nldg/dg_space.hpp"
#include "nldg/errors.hpp"
#include "nldg/kernel.hpp"
#include "nldg/nonlocal_assembly.hpp"

namespace nldg {

enum class StudyKind { converge, energy, limit, solve };

/// Horizon values: absolute, or multiples of h resolved per mesh.
struct DeltaSpec {
  enum class Mode { absolute, multiple_of_h };
  Mode mode = Mode::absolute;
  std::vector<double> values;

  [[nodiscard]] double resolve(std::size_t i, double h) const {
    return mode == Mode::absolute ? values.at(i) : values.at(i) * h;
  }
};

/// Reference solution for the vanishing-horizon study.
enum class LimitReference { exact, ldg };

struct StudyConfig {
  StudyKind kind = StudyKind::converge;
  std::vector<double> alphas{0.5};
  DeltaSpec delta{DeltaSpec::Mode::absolute, {0.2}};
  std::vector<int> degrees{2};
  std::vector<int> cells{10, 20, 40};
  double dt = 2e-5;
  double t_final = 1.0;
  SchemeVariant variant = SchemeVariant::forward;
  int squad_nodes = 8;
  int energy_stride = 1;
  int threads = 1;
  LimitReference limit_reference = LimitReference::exact;
  double domain_a = 0.0;
  double domain_b = 1.0;
};

/// One row of a convergence or limit table.  `order` is empty on the first
/// row of a group and NaN where it is undefined.
struct ErrorRow {
  double alpha = 0.0;
  double delta = 0.0;
  int k = 0;
  int cells = 0;
  double h = 0.0;
  double dt = 0.0;
  double t_final = 0.0;
  double error = 0.0;
  std::optional<double> order;
};

struct ErrorTable {
  std::vector<ErrorRow> rows;
};

struct EnergyTrace {
  std::vector<EnergySample> samples;
  double dt = 0.0;
};

/// Thrown when some cases of a sweep failed; carries the rows that finished.
class PartialTableError : public std::runtime_error {
 public:
  PartialTableError(ErrorTable partial, std::exception_ptr cause, const std::string& what)
      : std::runtime_error(what), partial_(std::move(partial)), cause_(std::move(cause)) {}
  [[nodiscard]] const ErrorTable& partial() const { return partial_; }
  [[nodiscard]] std::exception_ptr cause() const { return cause_; }

 private:
  ErrorTable partial_;
  std::exception_ptr cause_;
};

// ---------------------------------------------------------------------------
// small helpers

/// log(e_i / e_{i+1}) / log(size_i / size_{i+1}); NaN when an error is not positive.
inline std::vector<double> observed_orders(std::span<const double> errors,
                                           std::span<const double> sizes) {
  if (errors.size() != sizes.size() || errors.size() < 2)
    throw DomainError("observed_orders: need matching lists of length >= 2");
  std::vector<double> out;
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
    if (!(sizes[i] > sizes[i + 1]) || !(sizes[i + 1] > 0.0))
      throw DomainError("observed_orders: sizes must be positive and strictly decreasing");
    if (!(errors[i] > 0.0) || !(errors[i + 1] > 0.0)) {
      out.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    out.push_back(std::log(errors[i] / errors[i + 1]) / std::log(sizes[i] / sizes[i + 1]));
  }
  return out;
}

/// f_delta(x, t) = -cos(2 pi t) sin(2 pi x) (4 pi^2 + c) makes
/// u = cos(2 pi t) sin(2 pi x) an exact solution of u_tt + L_delta u = f_delta.
inline Forcing manufactured_forcing(const KernelSpec& kernel) {
  constexpr double pi = std::numbers::pi;
  const double amplitude = 4.0 * pi * pi + forcing_coefficient(kernel);
  return [amplitude](double x, double t) {
    return -std::cos(2.0 * pi * t) * std::sin(2.0 * pi * x) * amplitude;
  };
}

/// Worker count: NLDG_THREADS caps the hardware concurrency.
inline int default_threads() {
  int n = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  if (const char* env = std::getenv("NLDG_THREADS")) {
    const int cap = std::atoi(env);
    if (cap >= 1) n = std::min(n, cap);
  }
  return n;
}

namespace detail {

// Run body(i) for i in [0, count) on up to `threads` workers.  Results are
// written by index so output order never depends on scheduling.
template <class Body>
std::vector<std::exception_ptr> parallel_for(std::size_t count, int threads, Body&& body) {
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      try {
        body(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int n = std::max(1, std::min<int>(threads, static_cast<int>(count)));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  return errors;
}

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("unparseable number in CSV: '" + s + "'");
  return v;
}

inline void validate_common(const StudyConfig& cfg) {
  if (cfg.alphas.empty() || cfg.degrees.empty() || cfg.cells.empty() || cfg.delta.values.empty())
    throw ConfigError("alpha, delta, k and cells lists must be non-empty");
  for (double a : cfg.alphas) (void)make_kernel(a, 1.0);
  for (double d : cfg.delta.values)
    if (!(d > 0.0)) throw DomainError("horizon values must be > 0");
  for (int k : cfg.degrees)
    if (k < 0) throw DomainError("polynomial degree k must be >= 0");
  for (int n : cfg.cells)
    if (n < 2) throw DomainError("cell count must be >= 2");
  if (cfg.squad_nodes < 1) throw DomainError("s-quadrature nodes must be >= 1");
  (void)step_count(cfg.t_final, cfg.dt);
}

inline double sine_mode(double x) { return std::sin(2.0 * std::numbers::pi * x); }
inline double zero_function(double) { return 0.0; }

inline std::string describe(const std::exception_ptr& e) {
  try {
    std::rethrow_exception(e);
  } catch (const std::exception& ex) {
    return ex.what();
  } catch (...) {
    return "unknown error";
  }
}

// Keep the successful rows in configuration order and fill the order column
// between consecutive rows of the same group.  `size` is h or delta.
template <class Size>
ErrorTable merge_rows(const std::vector<ErrorRow>& rows, const std::vector<std::size_t>& group,
                      const std::vector<std::exception_ptr>& errors, Size&& size) {
  ErrorTable table;
  std::vector<std::size_t> kept_group;
  std::exception_ptr first_error;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (errors[i]) {
      if (!first_error) first_error = errors[i];
      continue;
    }
    table.rows.push_back(rows[i]);
    kept_group.push_back(group[i]);
  }
  for (std::size_t i = 1; i < table.rows.size(); ++i) {
    if (kept_group[i] != kept_group[i - 1]) continue;
    const ErrorRow& p = table.rows[i - 1];
    ErrorRow& r = table.rows[i];
    const double e[2] = {p.error, r.error};
    const double s[2] = {size(p), size(r)};
    if (s[0] > s[1])
      r.order = observed_orders(e, s).front();
    else
      r.order = std::numeric_limits<double>::quiet_NaN();
  }
  if (first_error) throw PartialTableError(std::move(table), first_error, describe(first_error));
  return table;
}

inline ErrorRow solve_manufactured(const StudyConfig& cfg, ErrorRow row) {
  const DgSpace sp = make_space(cfg.domain_a, cfg.domain_b, row.cells, row.k);
  const KernelSpec kernel = make_kernel(row.alpha, row.delta);
  OperatorMatrix s = stiffness_matrix(sp, kernel, {cfg.squad_nodes}, cfg.variant);
  CnState st = init_state(sp, std::move(s), sine_mode, zero_function, manufactured_forcing(kernel),
                          cfg.dt);
  const SolveResult res = solve_to(std::move(st), cfg.t_final, 0);
  const double t = cfg.t_final;
  row.error = l2_error(res.state.current(), [t](double x) {
    return std::cos(2.0 * std::numbers::pi * t) * sine_mode(x);
  });
  return row;
}

// Unforced run from u0 = sin(2 pi x), u1 = 0 with the given stiffness.
inline SolveResult solve_free(const DgSpace& sp, OperatorMatrix s, double dt, double t_final,
                              int energy_every) {
  CnState st = init_state(sp, std::move(s), sine_mode, zero_function, Forcing{}, dt);
  return solve_to(std::move(st), t_final, energy_every);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// drivers

/// Check every parameter and every case's bandwidth before any assembly.
inline void validate_study(const StudyConfig& cfg) {
  detail::validate_common(cfg);
  if (cfg.energy_stride < 1) throw ConfigError("energy stride must be >= 1");
  const bool sweep = cfg.kind == StudyKind::converge;
  const std::size_t n_cells = sweep ? cfg.cells.size() : 1;
  const std::size_t n_deg = sweep ? cfg.degrees.size() : 1;
  const bool ladder = cfg.kind == StudyKind::limit || sweep;
  const std::size_t n_delta = ladder ? cfg.delta.values.size() : 1;
  for (std::size_t c = 0; c < n_cells; ++c)
    for (std::size_t k = 0; k < n_deg; ++k) {
      const DgSpace sp = make_space(cfg.domain_a, cfg.domain_b, cfg.cells[c], cfg.degrees[k]);
      for (std::size_t d = 0; d < n_delta; ++d) check_bandwidth(sp, cfg.delta.resolve(d, sp.h()));
    }
}

/// Manufactured-solution sweep over (alpha, horizon, k, N).  Orders are
/// taken between consecutive N inside each (alpha, horizon, k) group.
inline ErrorTable run_convergence(const StudyConfig& cfg) {
  validate_study(cfg);
  std::vector<ErrorRow> rows;
  std::vector<std::size_t> group;
  std::size_t g = 0;
  for (double a : cfg.alphas)
    for (std::size_t d = 0; d < cfg.delta.values.size(); ++d)
      for (int k : cfg.degrees) {
        for (int n : cfg.cells) {
          const DgSpace sp = make_space(cfg.domain_a, cfg.domain_b, n, k);
          const double delta = cfg.delta.resolve(d, sp.h());
          rows.push_back({a, delta, k, n, sp.h(), cfg.dt, cfg.t_final, 0.0, std::nullopt});
          group.push_back(g);
        }
        ++g;
      }
  const auto errors = detail::parallel_for(rows.size(), cfg.threads, [&](std::size_t i) {
    rows[i] = detail::solve_manufactured(cfg, rows[i]);
  });
  return detail::merge_rows(rows, group, errors, [](const ErrorRow& r) { return r.h; });
}

/// Energy trace of the unforced problem for the first (alpha, delta, k, N).
inline EnergyTrace run_energy(const StudyConfig& cfg) {
  validate_study(cfg);
  const DgSpace sp = make_space(cfg.domain_a, cfg.domain_b, cfg.cells.front(), cfg.degrees.front());
  const KernelSpec kernel = make_kernel(cfg.alphas.front(), cfg.delta.resolve(0, sp.h()));
  OperatorMatrix s = stiffness_matrix(sp, kernel, {cfg.squad_nodes}, cfg.variant);
  SolveResult res = detail::solve_free(sp, std::move(s), cfg.dt, cfg.t_final, cfg.energy_stride);
  return {std::move(res.energy), cfg.dt};
}

/// Vanishing-horizon study: for each alpha and each delta of the ladder, the
/// unforced nonlocal solution at T is compared in the Lobatto-sampled max norm
/// with u_loc = cos(2 pi T) sin(2 pi x), or with the discrete local (LDG)
/// solution of the same variant when limit_reference = ldg.
inline ErrorTable run_delta_limit(const StudyConfig& cfg) {
  validate_study(cfg);
  const int n = cfg.cells.front();
  const int k = cfg.degrees.front();
  const DgSpace sp = make_space(cfg.domain_a, cfg.domain_b, n, k);
  std::vector<ErrorRow> rows;
  std::vector<std::size_t> group;
  for (std::size_t a = 0; a < cfg.alphas.size(); ++a)
    for (std::size_t d = 0; d < cfg.delta.values.size(); ++d) {
      const double delta = cfg.delta.resolve(d, sp.h());
      rows.push_back({cfg.alphas[a], delta, k, n, sp.h(), cfg.dt, cfg.t_final, 0.0, std::nullopt});
      group.push_back(a);
    }

  std::optional<FieldCoeffs> reference;
  if (cfg.limit_reference == LimitReference::ldg)
    reference = detail::solve_free(sp, ldg_stiffness(sp, cfg.variant), cfg.dt, cfg.t_final, 0)
                    .state.current();

  const auto errors = detail::parallel_for(rows.size(), cfg.threads, [&](std::size_t i) {
    ErrorRow& row = rows[i];
    const KernelSpec kernel = make_kernel(row.alpha, row.delta);
    const SolveResult res = detail::solve_free(
        sp, stiffness_matrix(sp, kernel, {cfg.squad_nodes}, cfg.variant), cfg.dt, cfg.t_final, 0);
    const double t = cfg.t_final;
    if (reference) {
      // compare cell by cell so interface nodes use the same cell on both sides
      FieldCoeffs diff = res.state.current();
      for (std::size_t q = 0; q < diff.coeffs.size(); ++q) diff.coeffs[q] -= reference->coeffs[q];
      row.error = linf_error(diff, detail::zero_function);
    } else {
      row.error = linf_error(res.state.current(), [t](double x) {
        return std::cos(2.0 * std::numbers::pi * t) * detail::sine_mode(x);
      });
    }
  });
  return detail::merge_rows(rows, group, errors, [](const ErrorRow& r) { return r.delta; });
}

/// Point values of an unforced solution at T: x and u at the Lobatto nodes.
struct SolutionSamples {
  std::vector<double> x;
  std::vector<double> u;
};

inline SolutionSamples sample_field(const FieldCoeffs& f) {
  SolutionSamples out;
  const DgSpace& sp = f.space;
  const BasisTable& tab = sp.lobatto_table();
  for (int j = 0; j < sp.cells(); ++j)
    for (std::size_t q = 0; q < tab.rule.size(); ++q) {
      out.x.push_back(sp.cell_left(j) + 0.5 * sp.h() * (tab.rule.nodes[q] + 1.0));
      out.u.push_back(eval_local(sp, f.coeffs, j, tab.rule.nodes[q]));
    }
  return out;
}

/// Unforced nonlocal solve from u0 = sin(2 pi x), u1 = 0 for the first case.
inline SolutionSamples run_solve(const StudyConfig& cfg, OperatorMatrix* stiffness_out = nullptr) {
  validate_study(cfg);
  const DgSpace sp = make_space(cfg.domain_a, cfg.domain_b, cfg.cells.front(), cfg.degrees.front());
  const KernelSpec kernel = make_kernel(cfg.alphas.front(), cfg.delta.resolve(0, sp.h()));
  OperatorMatrix s = stiffness_matrix(sp, kernel, {cfg.squad_nodes}, cfg.variant);
  if (stiffness_out) *stiffness_out = s;
  const SolveResult res = detail::solve_free(sp, std::move(s), cfg.dt, cfg.t_final, 0);
  return sample_field(res.state.current());
}

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* kConvergeHeader = "alpha,delta,k,N,h,dt,T,e_u,order";
inline constexpr const char* kEnergyHeader = "step,time,E,rel_drift";
inline constexpr const char* kLimitHeader = "alpha,k,h,dt,T,delta,linf_err,order";

inline void write_convergence_csv(const ErrorTable& t, std::ostream& os) {
  using detail::format_double;
  os << kConvergeHeader << '\n';
  for (const ErrorRow& r : t.rows)
    os << format_double(r.alpha) << ',' << format_double(r.delta) << ',' << r.k << ',' << r.cells
       << ',' << format_double(r.h) << ',' << format_double(r.dt) << ','
       << format_double(r.t_final) << ',' << format_double(r.error) << ','
       << (r.order ? format_double(*r.order) : std::string()) << '\n';
}

inline void write_limit_csv(const ErrorTable& t, std::ostream& os) {
  using detail::format_double;
  os << kLimitHeader << '\n';
  for (const ErrorRow& r : t.rows)
    os << format_double(r.alpha) << ',' << r.k << ',' << format_double(r.h) << ','
       << format_double(r.dt) << ',' << format_double(r.t_final) << ',' << format_double(r.delta)
       << ',' << format_double(r.error) << ','
       << (r.order ? format_double(*r.order) : std::string()) << '\n';
}

inline void write_energy_csv(const EnergyTrace& trace, std::ostream& os) {
  using detail::format_double;
  os << kEnergyHeader << '\n';
  const double e0 = trace.samples.empty() ? 0.0 : trace.samples.front().energy;
  for (const EnergySample& s : trace.samples) {
    const double drift = e0 > 0.0 ? (s.energy - e0) / e0 : s.energy - e0;
    os << s.step << ',' << format_double(static_cast<double>(s.step) * trace.dt) << ','
       << format_double(s.energy) << ',' << format_double(drift) << '\n';
  }
}

inline void write_solution_csv(const SolutionSamples& s, std::ostream& os) {
  os << "x,u\n";
  for (std::size_t i = 0; i < s.x.size(); ++i)
    os << detail::format_double(s.x[i]) << ',' << detail::format_double(s.u[i]) << '\n';
}

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream is(line);
  while (std::getline(is, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline int parse_int(const std::string& s) {
  int v = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("unparseable integer in CSV: '" + s + "'");
  return v;
}

template <class Row>
ErrorTable read_table(std::istream& is, const char* header, std::size_t fields, Row&& parse_row) {
  std::string line;
  if (!std::getline(is, line) || line != header)
    throw ConfigError(std::string("CSV header mismatch, expected ") + header);
  ErrorTable t;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != fields) throw ConfigError("CSV row has wrong field count");
    t.rows.push_back(parse_row(cells));
  }
  return t;
}

inline std::optional<double> parse_order(const std::vector<std::string>& c, std::size_t i) {
  if (i >= c.size() || c[i].empty()) return std::nullopt;
  return parse_double(c[i]);
}

}  // namespace detail

inline ErrorTable read_convergence_csv(std::istream& is) {
  return detail::read_table(is, kConvergeHeader, 9, [](const std::vector<std::string>& c) {
    ErrorRow r;
    r.alpha = detail::parse_double(c[0]);
    r.delta = detail::parse_double(c[1]);
    r.k = detail::parse_int(c[2]);
    r.cells = detail::parse_int(c[3]);
    r.h = detail::parse_double(c[4]);
    r.dt = detail::parse_double(c[5]);
    r.t_final = detail::parse_double(c[6]);
    r.error = detail::parse_double(c[7]);
    r.order = detail::parse_order(c, 8);
    return r;
  });
}

inline ErrorTable read_limit_csv(std::istream& is) {
  return detail::read_table(is, kLimitHeader, 8, [](const std::vector<std::string>& c) {
    ErrorRow r;
    r.alpha = detail::parse_double(c[0]);
    r.k = detail::parse_int(c[1]);
    r.h = detail::parse_double(c[2]);
    r.dt = detail::parse_double(c[3]);
    r.t_final = detail::parse_double(c[4]);
    r.delta = detail::parse_double(c[5]);
    r.error = detail::parse_double(c[6]);
    r.order = detail::parse_order(c, 7);
    return r;
  });
}

}  // namespace nldg
