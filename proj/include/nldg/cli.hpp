#pragma once

// Command-line front end: `nldg <subcommand> [flags]`.
//
// Subcommands: converge, energy, limit, solve, selftest.  Every flag may also
// be given in an INI-style file (`key = value`, keys are the flag names
// without leading dashes) passed with --config; command-line flags win.
//
// Exit status: 0 success, 1 runtime failure, 2 usage or validation error.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "nldg/errors.hpp"
#include "nldg/identities.hpp"
#include "nldg/operator_matrix.hpp"
#include "nldg/studies.hpp"

namespace nldg {

namespace cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

/// Raw flag values keyed by flag name ("alpha", "delta-mult", ...).
using FlagMap = std::map<std::string, std::string>;

inline const std::vector<std::string>& known_keys() {
  static const std::vector<std::string> keys{
      "alpha", "delta",  "delta-mult",    "k",   "cells", "dt",          "t-final", "variant",
      "squad-nodes",     "energy-stride", "out", "full",  "dump-matrix", "reference"};
  return keys;
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

/// Parse `key = value` lines; '#' and ';' start comments, [sections] are ignored.
inline FlagMap read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  FlagMap out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find_first_of("#;");
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty() || line.front() == '[') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(line.substr(0, eq));
    for (char& c : key)
      if (c == '_') c = '-';
    if (std::find(known_keys().begin(), known_keys().end(), key) == known_keys().end())
      throw ConfigError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

inline double to_real(const std::string& flag, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size() || !std::isfinite(v))
    throw ConfigError("--" + flag + ": cannot parse '" + t + "' as a number");
  return v;
}

inline int to_int(const std::string& flag, const std::string& text) {
  const std::string t = trim(text);
  int v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError("--" + flag + ": cannot parse '" + t + "' as an integer");
  return v;
}

/// Comma or whitespace separated list.
inline std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : text) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

inline std::vector<double> to_real_list(const std::string& flag, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) out.push_back(to_real(flag, item));
  if (out.empty()) throw ConfigError("--" + flag + ": empty list");
  return out;
}

inline std::vector<int> to_int_list(const std::string& flag, const std::string& text) {
  std::vector<int> out;
  for (const auto& item : split_list(text)) out.push_back(to_int(flag, item));
  if (out.empty()) throw ConfigError("--" + flag + ": empty list");
  return out;
}

inline bool to_bool(const std::string& flag, const std::string& text) {
  const std::string t = trim(text);
  if (t == "1" || t == "true" || t == "yes" || t == "on") return true;
  if (t == "0" || t == "false" || t == "no" || t == "off") return false;
  throw ConfigError("--" + flag + ": expected true or false, got '" + t + "'");
}

/// Per-subcommand defaults, the setups of the reference experiments.
inline StudyConfig defaults_for(StudyKind kind, bool full) {
  StudyConfig c;
  c.kind = kind;
  switch (kind) {
    case StudyKind::converge:
      c.alphas = {0.25, 0.5, 1.5, 2.5};
      c.delta = {DeltaSpec::Mode::absolute, {0.2}};
      c.degrees = {0, 1, 2};
      c.cells = full ? std::vector<int>{10, 20, 40, 80} : std::vector<int>{10, 20, 40};
      c.dt = 2e-5;
      c.t_final = 1.0;
      break;
    case StudyKind::energy:
      c.alphas = {2.0 / 3.0};
      c.delta = {DeltaSpec::Mode::multiple_of_h, {2.0}};
      c.degrees = {5};
      c.cells = {80};
      c.dt = 0.1;
      c.t_final = full ? 1000.0 : 100.0;
      break;
    case StudyKind::limit:
      c.alphas = {0.5, 1.5};
      c.delta = {DeltaSpec::Mode::absolute, {0.005, 0.0025, 0.00125, 0.000625}};
      if (full) c.delta.values.push_back(0.0003125);
      c.degrees = {2};
      c.cells = {40};
      c.dt = 0.01;
      c.t_final = 100.0;
      break;
    case StudyKind::solve:
      c.alphas = {0.5};
      c.delta = {DeltaSpec::Mode::absolute, {0.2}};
      c.degrees = {2};
      c.cells = {20};
      c.dt = 0.01;
      c.t_final = 1.0;
      break;
  }
  return c;
}

struct Invocation {
  StudyConfig config;
  std::string out;          // empty: standard output
  std::string dump_matrix;  // solve only
};

/// Merge file values under command-line values and build the configuration.
inline Invocation build_invocation(StudyKind kind, const FlagMap& cli_flags, const FlagMap& file) {
  FlagMap merged = file;
  if (cli_flags.count("delta") || cli_flags.count("delta-mult")) {
    merged.erase("delta");
    merged.erase("delta-mult");
  }
  for (const auto& [k, v] : cli_flags) merged[k] = v;
  if (merged.count("delta") && merged.count("delta-mult"))
    throw ConfigError("--delta and --delta-mult are mutually exclusive");

  const bool full = merged.count("full") ? to_bool("full", merged.at("full")) : false;
  Invocation inv;
  StudyConfig& c = inv.config;
  c = defaults_for(kind, full);
  c.threads = default_threads();

  if (auto it = merged.find("alpha"); it != merged.end()) c.alphas = to_real_list("alpha", it->second);
  if (auto it = merged.find("delta"); it != merged.end())
    c.delta = {DeltaSpec::Mode::absolute, to_real_list("delta", it->second)};
  if (auto it = merged.find("delta-mult"); it != merged.end())
    c.delta = {DeltaSpec::Mode::multiple_of_h, to_real_list("delta-mult", it->second)};
  if (auto it = merged.find("k"); it != merged.end()) c.degrees = to_int_list("k", it->second);
  if (auto it = merged.find("cells"); it != merged.end()) c.cells = to_int_list("cells", it->second);
  if (auto it = merged.find("dt"); it != merged.end()) c.dt = to_real("dt", it->second);
  if (auto it = merged.find("t-final"); it != merged.end()) c.t_final = to_real("t-final", it->second);
  if (auto it = merged.find("variant"); it != merged.end()) {
    const std::string v = trim(it->second);
    if (v == "forward")
      c.variant = SchemeVariant::forward;
    else if (v == "backward")
      c.variant = SchemeVariant::backward;
    else
      throw ConfigError("--variant: expected forward or backward, got '" + v + "'");
  }
  if (auto it = merged.find("squad-nodes"); it != merged.end())
    c.squad_nodes = to_int("squad-nodes", it->second);
  if (auto it = merged.find("energy-stride"); it != merged.end())
    c.energy_stride = to_int("energy-stride", it->second);
  if (auto it = merged.find("reference"); it != merged.end()) {
    const std::string v = trim(it->second);
    if (v == "exact")
      c.limit_reference = LimitReference::exact;
    else if (v == "ldg")
      c.limit_reference = LimitReference::ldg;
    else
      throw ConfigError("--reference: expected exact or ldg, got '" + v + "'");
  }
  if (auto it = merged.find("out"); it != merged.end()) inv.out = trim(it->second);
  if (auto it = merged.find("dump-matrix"); it != merged.end()) inv.dump_matrix = trim(it->second);

  if (kind != StudyKind::converge && (c.cells.size() != 1 || c.degrees.size() != 1))
    throw ConfigError("--cells and --k take a single value for this subcommand");
  if ((kind == StudyKind::energy || kind == StudyKind::solve) &&
      (c.alphas.size() != 1 || c.delta.values.size() != 1))
    throw ConfigError("--alpha and --delta take a single value for this subcommand");
  validate_study(c);
  return inv;
}

inline std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

// Write via `body` to the named file, or to `out` when the path is empty.
template <class Body>
void emit(const std::string& path, std::ostream& out, Body&& body) {
  if (path.empty()) {
    body(out);
    out.flush();
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot open output file '" + path + "'");
  body(f);
  f.flush();
  if (!f) throw std::runtime_error("write to '" + path + "' failed");
}

inline int run_selftest(std::ostream& out) {
  bool ok = true;
  auto line = [&](bool pass, const std::string& what) {
    ok = ok && pass;
    out << (pass ? "PASS " : "FAIL ") << what << '\n';
  };
  const IdentityReport rep = run_identity_suite(50);
  {
    std::ostringstream os;
    os << "K_s = -H_s^T on " << rep.cases << " random cases: max gap " << rep.max_skew
       << " (tol 1e-12)";
    line(rep.max_skew <= 1e-12, os.str());
  }
  {
    std::ostringstream os;
    os << "quadratic-form identity on " << rep.cases << " random cases: max rel gap "
       << rep.max_quadratic << " (tol 1e-11)";
    line(rep.max_quadratic <= 1e-11, os.str());
  }
  for (double alpha : {0.25, 0.5, 1.5, 2.5}) {
    const double gap = std::max(k0_closed_form_gap(alpha, 1.0), k0_closed_form_gap(alpha, 0.5));
    std::ostringstream os;
    os << "k=0 stiffness equals (1/h) circ(-1,2,-1), alpha=" << alpha << ": max gap " << gap
       << " (tol 1e-12)";
    line(gap <= 1e-12, os.str());
  }
  return ok ? kExitOk : kExitRuntime;
}

inline int run_study(StudyKind kind, const Invocation& inv, std::ostream& out) {
  const StudyConfig& c = inv.config;
  switch (kind) {
    case StudyKind::converge:
    case StudyKind::limit: {
      auto writer = [kind](const ErrorTable& t) {
        return [&t, kind](std::ostream& os) {
          if (kind == StudyKind::converge)
            write_convergence_csv(t, os);
          else
            write_limit_csv(t, os);
        };
      };
      try {
        const ErrorTable t = kind == StudyKind::converge ? run_convergence(c) : run_delta_limit(c);
        emit(inv.out, out, writer(t));
      } catch (const PartialTableError& e) {
        emit(inv.out, out, writer(e.partial()));
        throw;
      }
      break;
    }
    case StudyKind::energy: {
      const EnergyTrace trace = run_energy(c);
      emit(inv.out, out, [&](std::ostream& os) { write_energy_csv(trace, os); });
      break;
    }
    case StudyKind::solve: {
      OperatorMatrix s;
      const SolutionSamples samples = run_solve(c, &s);
      if (!inv.dump_matrix.empty())
        emit(inv.dump_matrix, out, [&](std::ostream& os) { write_triplets(s, os); });
      emit(inv.out, out, [&](std::ostream& os) { write_solution_csv(samples, os); });
      break;
    }
  }
  return kExitOk;
}

}  // namespace cli

/// Parse argv, run the requested subcommand and return the exit status.
/// Diagnostics go to `err` as a single line.
inline int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out,
                              std::ostream& err) {
  using namespace cli;
  CLI::App app{"Nonlocal wave equation DG solver with Crank-Nicolson time stepping", "nldg"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* app;
    StudyKind kind;
    FlagMap values;
    std::string config;
    bool full = false;
  };
  std::vector<Sub> subs;
  subs.reserve(4);
  const std::pair<const char*, StudyKind> study_cmds[] = {
      {"converge", StudyKind::converge},
      {"energy", StudyKind::energy},
      {"limit", StudyKind::limit},
      {"solve", StudyKind::solve}};
  const char* study_help[] = {
      "manufactured-solution convergence table (CSV: alpha,delta,k,N,h,dt,T,e_u,order)",
      "energy trace of the unforced problem (CSV: step,time,E,rel_drift)",
      "vanishing-horizon study against the local solution (CSV: alpha,k,h,dt,T,delta,linf_err,order)",
      "unforced solve from sin(2 pi x); writes x,u at Lobatto nodes"};
  for (int i = 0; i < 4; ++i) {
    subs.push_back({app.add_subcommand(study_cmds[i].first, study_help[i]), study_cmds[i].second, {}, {}});
  }
  for (Sub& s : subs) {
    CLI::App* a = s.app;
    FlagMap& v = s.values;
    a->add_option("--alpha", v["alpha"], "kernel exponents, list, each in (0,3)");
    auto* d = a->add_option("--delta", v["delta"], "horizons, list (absolute)");
    auto* dm = a->add_option("--delta-mult", v["delta-mult"], "horizons as multiples of h, list");
    d->excludes(dm);
    a->add_option("--k", v["k"], "polynomial degrees, list");
    a->add_option("--cells", v["cells"], "cell counts N, list");
    a->add_option("--dt", v["dt"], "time step");
    a->add_option("--t-final", v["t-final"], "final time T (integer multiple of dt)");
    a->add_option("--variant", v["variant"], "difference quotient: forward or backward");
    a->add_option("--squad-nodes", v["squad-nodes"], "Gauss nodes per s-panel (default 8)");
    a->add_option("--energy-stride", v["energy-stride"], "energy sampling stride in steps");
    a->add_option("--out", v["out"], "output CSV path (default: standard output)");
    a->add_option("--config", s.config, "INI file of key = value defaults");
    a->add_flag("--full", s.full, "long-run defaults (N up to 80, T = 1000, longer ladder)");
    if (s.kind == StudyKind::solve)
      a->add_option("--dump-matrix", v["dump-matrix"], "write the stiffness operator as triplets");
    if (s.kind == StudyKind::limit)
      a->add_option("--reference", v["reference"], "exact (local solution) or ldg (discrete local)");
  }
  CLI::App* selftest = app.add_subcommand("selftest", "operator identity and closed-form checks");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "nldg: usage error: " << one_line(e.what()) << '\n';
    return kExitUsage;
  }

  if (selftest->parsed()) {
    try {
      return run_selftest(out);
    } catch (const std::exception& e) {
      err << "nldg: error: " << one_line(e.what()) << '\n';
      return kExitRuntime;
    }
  }

  for (Sub& s : subs) {
    if (!s.app->parsed()) continue;
    Invocation inv;
    try {
      FlagMap given;
      for (const auto& [key, value] : s.values)
        if (s.app->count("--" + key) > 0) given[key] = value;
      if (s.full) given["full"] = "true";
      const FlagMap file = s.config.empty() ? FlagMap{} : read_config_file(s.config);
      inv = build_invocation(s.kind, given, file);
    } catch (const std::exception& e) {
      err << "nldg: usage error: " << one_line(e.what()) << '\n';
      return kExitUsage;
    }
    try {
      return run_study(s.kind, inv, out);
    } catch (const std::exception& e) {
      err << "nldg: error: " << one_line(e.what()) << '\n';
      return kExitRuntime;
    }
  }
  err << "nldg: usage error: no subcommand given\n";
  return kExitUsage;
}

}  // namespace nldg
