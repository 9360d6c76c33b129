#pragma once

// Command implementations behind the `bearing_obs` executable. Each returns
// the process exit code: 0 success, 1 analysis failure, 2 input or
// validation error, 3 runtime fault.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "bearing_obs/analysis.hpp"
#include "bearing_obs/config.hpp"
#include "bearing_obs/excitation.hpp"
#include "bearing_obs/sim.hpp"
#include "bearing_obs/trace_io.hpp"

namespace bearing_obs::cli {

enum ExitCode : int { kOk = 0, kAnalysisFailure = 1, kInputError = 2, kRuntimeFault = 3 };

inline constexpr const char* kSeedEnv = "BEARING_OBS_SEED";

struct Streams {
  std::ostream& out = std::cout;
  std::ostream& err = std::cerr;
};

/// Seed precedence: command-line flag, then BEARING_OBS_SEED, then config.
inline std::uint64_t resolve_seed(std::optional<std::uint64_t> flag, std::uint64_t config_seed) {
  if (flag) return *flag;
  if (const char* env = std::getenv(kSeedEnv); env && *env) return cfg::parse_u64(kSeedEnv, env);
  return config_seed;
}

inline std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw FormatError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& content) {
  if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << content;
}

inline std::string trace_csv_text(const SimulationTrace& trace) {
  std::ostringstream ss;
  write_trace_csv(ss, trace);
  return ss.str();
}

inline std::string trace_json_text(const SimulationTrace& trace) {
  return trace_to_json(trace).dump() + "\n";
}

/// Loads a trace by extension (.json carries its scenario; .csv takes the
/// scenario from `meta`).
inline SimulationTrace load_trace(const std::filesystem::path& path, const Scenario& meta) {
  if (path.extension() == ".json") {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_file(path));
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("malformed JSON: ") + e.what());
    }
    return trace_from_json(j);
  }
  std::istringstream in(read_file(path));
  return read_trace_csv(in, meta);
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

inline std::string fmt_vec(const Vector& v) {
  std::string s = "(";
  for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? ", " : "") + fmt(v[i]);
  return s + ")";
}

/// Final errors, estimate and fitted decay rates over [10%, 80%] of the run.
inline void print_summary(const SimulationTrace& trace, std::ostream& os) {
  const TraceSample& last = trace.samples.back();
  os << "samples: " << trace.samples.size() << "  t_end: " << fmt(last.t) << " s\n";
  os << "final |x - z|     : " << fmt(last.err_xz) << " m\n";
  os << "final |x - xhat|  : " << fmt(last.err_x) << " m\n";
  os << "final |ahat - a|  : " << fmt(last.err_a) << " m/s\n";
  os << "final ahat        : " << fmt_vec(last.a_hat) << "\n";
  std::vector<double> t, exz, ex, ea;
  for (const TraceSample& s : trace.samples) {
    t.push_back(s.t);
    exz.push_back(s.err_xz);
    ex.push_back(s.err_x);
    ea.push_back(s.err_a);
  }
  const double t0 = trace.samples.front().t, t1 = last.t;
  const double a = t0 + 0.1 * (t1 - t0), b = t0 + 0.8 * (t1 - t0);
  auto rate = [&](const std::vector<double>& e) {
    try {
      const LogLinearFit f = fit_log_linear(t, e, a, b);
      return fmt(f.rate) + " 1/s (R^2 " + fmt(f.r_squared) + ")";
    } catch (const std::exception&) {
      return std::string("n/a");
    }
  };
  os << "decay rate |x - z|    : " << rate(exz) << "\n";
  os << "decay rate |x - xhat| : " << rate(ex) << "\n";
  os << "decay rate |ahat - a| : " << rate(ea) << "\n";
  if (trace.failure) os << "FAILED at t = " << fmt(trace.failure->t) << ": " << trace.failure->message << "\n";
}

inline void print_bound_table(const BoundReport& r, std::ostream& os) {
  auto row = [&](const std::string& name, const std::string& observed, const std::string& bound,
                 bool ok) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "%-28s %-22s %-14s %s\n", name.c_str(), observed.c_str(),
                  bound.c_str(), ok ? "PASS" : "FAIL");
    os << buf;
  };
  auto has = [&](const std::string& id) {
    for (const Violation& v : r.violations) {
      if (v.bound == id) return true;
    }
    return false;
  };
  char head[160];
  std::snprintf(head, sizeof head, "%-28s %-22s %-14s %s\n", "check", "observed", "bound", "status");
  os << head;
  row("gamma (theory / empirical)", fmt(r.gamma_empirical), fmt(r.gamma_theory), r.pe_certified);
  row("transition envelope", "-", "e^{-gamma T}", !has("transition_lower") && !has("transition_upper"));
  row("ultimate bound (sup)", "-", "-", !has("ultimate_sup"));
  row("ultimate bound (late)", r.horizon_sufficient ? fmt(r.ultimate_bound_observed) : "insufficient horizon",
      fmt(r.ultimate_bound_theory), !has("ultimate_late"));
  row("det(M) > 0", fmt(r.det_min_observed), "0", !has("det_positive"));
  row("det(M) late floor", r.horizon_sufficient ? fmt(r.det_late_min_observed) : "insufficient horizon",
      fmt(r.det_floor_theory), !has("det_floor"));
  row("kappa(M) bound", fmt(r.cond_max_observed), fmt(r.cond_bound_theory), !has("cond_bound"));
  row("Jacobi residual", fmt(r.jacobi_residual), "1e-3", !has("jacobi"));
  for (const std::string& n : r.notes) os << "note: " << n << "\n";
  for (const Violation& v : r.violations) {
    os << "violation: t = " << fmt(v.t) << "  " << v.bound << "  margin " << fmt(v.margin) << "\n";
  }
}

struct SimulateOptions {
  std::filesystem::path config;
  std::filesystem::path out_dir = ".";
  std::optional<std::string> format;  ///< "csv" or "json"
  std::optional<std::uint64_t> seed;
};

inline int cmd_simulate(const SimulateOptions& opt, Streams io = {}) {
  RunConfig rc;
  try {
    rc = parse_config(read_file(opt.config));
    rc.scenario.seed = resolve_seed(opt.seed, rc.scenario.seed);
    if (opt.format && *opt.format != "csv" && *opt.format != "json") {
      throw ValidationError("--format", "expected csv or json");
    }
  } catch (const Error& e) {
    io.err << "error: " << e.what() << "\n";
    return kInputError;
  }

  const SimulationTrace trace = simulate(rc.scenario);
  try {
    std::string csv = rc.csv_path, json = rc.json_path;
    if (opt.format == "csv" && csv.empty()) csv = "trace.csv";
    if (opt.format == "json" && json.empty()) json = "trace.json";
    if (csv.empty() && json.empty()) csv = "trace.csv";
    if (!csv.empty()) write_file(opt.out_dir / csv, trace_csv_text(trace));
    if (!json.empty()) write_file(opt.out_dir / json, trace_json_text(trace));
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return kRuntimeFault;
  }
  print_summary(trace, io.out);
  if (!trace.ok()) return kRuntimeFault;

  int code = kOk;
  try {
    if (rc.pe_check) {
      const PEReport pe = pe_report(bearing_signal(trace), rc.delta, rc.epsilon, rc.scenario.gains.k);
      io.out << "PE: mu = " << fmt(pe.mu) << " integral " << (pe.passes_integral ? "pass" : "fail")
             << ", derivative " << (pe.passes_derivative ? "pass" : "fail") << ", gamma = "
             << fmt(pe.gamma) << "\n";
      if (!pe.passes()) code = kAnalysisFailure;
    }
    if (rc.bounds) {
      const BoundReport br = analyze_trace(trace, rc.delta, rc.epsilon);
      print_bound_table(br, io.out);
      if (!br.compliant()) code = kAnalysisFailure;
    }
  } catch (const WindowTooShort& e) {
    io.err << "error: " << e.what() << "\n";
    return kInputError;
  }
  return code;
}

struct ReproduceOptions {
  std::string variant = "noisefree";
  std::filesystem::path out_dir = ".";
  std::optional<std::uint64_t> seed;
  std::optional<double> duration;
};

/// Plot-ready columns: path (truth vs estimate), error norms, bias estimate.
inline void write_figure_data(const SimulationTrace& trace, const std::filesystem::path& dir,
                              const std::string& tag) {
  const int n = trace.scenario.n;
  std::string path = "# t", errors = "# t err_xz err_x err_a\n", bias = "# t";
  for (int i = 1; i <= n; ++i) path += " x" + std::to_string(i);
  for (int i = 1; i <= n; ++i) path += " xhat" + std::to_string(i);
  for (int i = 1; i <= n; ++i) bias += " ahat" + std::to_string(i);
  for (int i = 1; i <= n; ++i) bias += " a" + std::to_string(i);
  path += "\n";
  bias += "\n";
  auto num = [](double v) { return " " + cfg::format_double(v); };
  for (const TraceSample& s : trace.samples) {
    path += cfg::format_double(s.t);
    for (int i = 0; i < n; ++i) path += num(s.x_true[i]);
    for (int i = 0; i < n; ++i) path += num(s.x_hat[i]);
    path += "\n";
    errors += cfg::format_double(s.t) + num(s.err_xz) + num(s.err_x) + num(s.err_a) + "\n";
    bias += cfg::format_double(s.t);
    for (int i = 0; i < n; ++i) bias += num(s.a_hat[i]);
    for (int i = 0; i < n; ++i) bias += num(trace.scenario.a_true[i]);
    bias += "\n";
  }
  write_file(dir / ("fig_path_" + tag + ".dat"), path);
  write_file(dir / ("fig_errors_" + tag + ".dat"), errors);
  write_file(dir / ("fig_bias_" + tag + ".dat"), bias);
}

inline int cmd_reproduce_paper(const ReproduceOptions& opt, Streams io = {}) {
  Scenario sc;
  try {
    if (opt.variant == "noisefree") sc = circle_scenario();
    else if (opt.variant == "noisy") sc = noisy_circle_scenario();
    else throw ValidationError("--variant", "expected noisefree or noisy, got '" + opt.variant + "'");
    sc.seed = resolve_seed(opt.seed, sc.seed);
    if (opt.duration) sc.duration = *opt.duration;
    sc.validate();
  } catch (const Error& e) {
    io.err << "error: " << e.what() << "\n";
    return kInputError;
  }
  const SimulationTrace trace = simulate(sc);
  try {
    write_file(opt.out_dir / ("trace_" + opt.variant + ".csv"), trace_csv_text(trace));
    write_file(opt.out_dir / ("trace_" + opt.variant + ".json"), trace_json_text(trace));
    RunConfig rc;
    rc.scenario = sc;
    write_file(opt.out_dir / ("scenario_" + opt.variant + ".cfg"), to_config_text(rc));
    write_figure_data(trace, opt.out_dir, opt.variant);
  } catch (const std::exception& e) {
    io.err << "error: " << e.what() << "\n";
    return kRuntimeFault;
  }
  io.out << "variant: " << opt.variant << "\n";
  print_summary(trace, io.out);
  const Vector& ahat = trace.samples.back().a_hat;
  const Vector rel = (ahat - sc.a_true).cwiseQuotient(sc.a_true.cwiseAbs().cwiseMax(1e-300));
  io.out << "ahat relative error: " << fmt_vec(rel) << "\n";
  return trace.ok() ? kOk : kRuntimeFault;
}

struct TraceToolOptions {
  std::filesystem::path trace;
  std::optional<std::filesystem::path> config;  ///< scenario for CSV traces
  double delta = kCirclePeriod;
  double epsilon = 0.05;
  bool dual = false;
  std::optional<std::filesystem::path> report;  ///< where to write the JSON report
};

inline Scenario trace_meta(const TraceToolOptions& opt) {
  if (opt.config) return parse_config(read_file(*opt.config)).scenario;
  return circle_scenario();
}

inline int cmd_pe_check(const TraceToolOptions& opt, Streams io = {}) {
  try {
    const SimulationTrace trace = load_trace(opt.trace, trace_meta(opt));
    const DirectionSignal sig = opt.dual ? dual_signal(trace) : bearing_signal(trace);
    const double k = opt.dual ? trace.scenario.gains.k_star : trace.scenario.gains.k;
    const PEReport r = pe_report(sig, opt.delta, opt.epsilon, k);
    const std::string text = to_json(r).dump(2) + "\n";
    if (opt.report) write_file(*opt.report, text);
    else io.out << text;
    return r.passes() ? kOk : kAnalysisFailure;
  } catch (const Error& e) {
    io.err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::invalid_argument& e) {
    io.err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

inline int cmd_analyze(const TraceToolOptions& opt, Streams io = {}) {
  try {
    const SimulationTrace trace = load_trace(opt.trace, trace_meta(opt));
    const BoundReport r = analyze_trace(trace, opt.delta, opt.epsilon);
    print_bound_table(r, io.out);
    if (opt.report) write_file(*opt.report, to_json(r).dump(2) + "\n");
    return r.compliant() ? kOk : kAnalysisFailure;
  } catch (const Error& e) {
    io.err << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::invalid_argument& e) {
    io.err << "error: " << e.what() << "\n";
    return kInputError;
  }
}

}  // namespace bearing_obs::cli
