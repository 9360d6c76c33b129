#pragma once

// Trace and report serialization.
//
// CSV layout, one row per sample, numbers in shortest round-trip form:
//   t, x1..xn, v1..vn, y1..yn, xhat1_1..n, zstar_1..n, M_11..M_nn (row-major),
//   xhat_1..n, ahat_1..n, err_xz, err_x, err_a
// The JSON trace carries the same columns plus the producing scenario.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "bearing_obs/analysis.hpp"
#include "bearing_obs/config.hpp"
#include "bearing_obs/excitation.hpp"
#include "bearing_obs/sim.hpp"

namespace bearing_obs {

/// Malformed trace file.
class FormatError : public Error {
 public:
  using Error::Error;
};

inline std::vector<std::string> trace_columns(int n) {
  std::vector<std::string> c{"t"};
  auto add = [&](const std::string& prefix) {
    for (int i = 1; i <= n; ++i) c.push_back(prefix + std::to_string(i));
  };
  add("x");
  add("v");
  add("y");
  add("xhat1_");
  add("zstar_");
  for (int i = 1; i <= n; ++i) {
    for (int j = 1; j <= n; ++j) {
      c.push_back(n < 10 ? "M_" + std::to_string(i) + std::to_string(j)
                         : "M_" + std::to_string(i) + "_" + std::to_string(j));
    }
  }
  add("xhat_");
  add("ahat_");
  c.insert(c.end(), {"err_xz", "err_x", "err_a"});
  return c;
}

inline std::vector<double> sample_row(const TraceSample& s) {
  std::vector<double> row{s.t};
  auto put = [&](const Vector& v) { row.insert(row.end(), v.data(), v.data() + v.size()); };
  put(s.x_true);
  put(s.v_meas);
  put(s.y);
  put(s.state.x_hat_1);
  put(s.state.z_hat_star);
  const Eigen::Index n = s.state.M.rows();
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) row.push_back(s.state.M(i, j));
  }
  put(s.x_hat);
  put(s.a_hat);
  row.insert(row.end(), {s.err_xz, s.err_x, s.err_a});
  return row;
}

/// Inverse of sample_row; derived outputs (ys, vs) are recomputed from M when
/// it is invertible.
inline TraceSample sample_from_row(const std::vector<double>& row, int n) {
  TraceSample s;
  std::size_t p = 0;
  auto take = [&]() {
    Vector v(n);
    for (int i = 0; i < n; ++i) v[i] = row[p++];
    return v;
  };
  s.t = row[p++];
  s.x_true = take();
  s.v_meas = take();
  s.y = take();
  s.state.x_hat_1 = take();
  s.state.z_hat_star = take();
  s.state.M.resize(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) s.state.M(i, j) = row[p++];
  }
  s.state.t = s.t;
  s.x_hat = take();
  s.a_hat = take();
  s.err_xz = row[p++];
  s.err_x = row[p++];
  s.err_a = row[p++];
  s.y_star = s.y;
  s.v_star = s.v_meas;
  try {
    const Matrix Mi = invert(s.state.M);
    s.y_star = direction(Mi * s.y).vec();
    s.v_star = Mi * (s.v_meas - Mi * s.state.x_hat_1);
  } catch (const Error&) {
    // leave the primal values; m_health reports the bad M
  }
  return s;
}

inline void write_trace_csv(std::ostream& os, const SimulationTrace& trace) {
  const auto cols = trace_columns(trace.scenario.n);
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
  std::string line;
  for (const TraceSample& s : trace.samples) {
    line.clear();
    const auto row = sample_row(s);
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) line += ',';
      line += cfg::format_double(row[i]);
    }
    line += '\n';
    os << line;
  }
}

/// Reads a CSV trace; `meta` supplies the scenario (gains, bias) the CSV does
/// not carry and must match the file's dimension.
inline SimulationTrace read_trace_csv(std::istream& is, const Scenario& meta) {
  std::string header;
  if (!std::getline(is, header)) throw FormatError("empty trace file");
  if (!header.empty() && header.back() == '\r') header.pop_back();
  std::vector<std::string> names;
  {
    std::stringstream ss(header);
    std::string tok;
    while (std::getline(ss, tok, ',')) names.push_back(cfg::trim(tok));
  }
  int n = 0;
  for (int m = 2; m <= 64; ++m) {
    if (static_cast<std::size_t>(1 + 7 * m + m * m + 3) == names.size()) n = m;
  }
  if (n == 0 || names != trace_columns(n)) throw FormatError("unrecognized trace header");
  if (meta.n != n) {
    throw FormatError("trace has n = " + std::to_string(n) + " but the scenario has n = " +
                      std::to_string(meta.n));
  }
  SimulationTrace trace;
  trace.scenario = meta;
  std::string line;
  std::size_t line_no = 1;
  std::vector<double> row;
  while (std::getline(is, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    row.clear();
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p <= end) {
      const char* comma = std::find(p, end, ',');
      double v = 0.0;
      const auto [ptr, ec] = std::from_chars(p, comma, v);
      if (ec != std::errc() || ptr != comma) {
        throw FormatError("bad number on line " + std::to_string(line_no));
      }
      row.push_back(v);
      p = comma + 1;
    }
    if (row.size() != names.size()) {
      throw FormatError("wrong column count on line " + std::to_string(line_no));
    }
    trace.samples.push_back(sample_from_row(row, n));
  }
  if (trace.samples.size() < 2) throw FormatError("trace has fewer than two samples");
  return trace;
}

inline nlohmann::json trace_to_json(const SimulationTrace& trace) {
  nlohmann::json scen = nlohmann::json::object();
  for (const auto& [k, v] : scenario_entries(trace.scenario)) scen[k] = v;
  nlohmann::json rows = nlohmann::json::array();
  for (const TraceSample& s : trace.samples) rows.push_back(sample_row(s));
  nlohmann::json failure = nullptr;
  if (trace.failure) failure = {{"t", trace.failure->t}, {"message", trace.failure->message}};
  return {{"scenario", scen},
          {"columns", trace_columns(trace.scenario.n)},
          {"rows", rows},
          {"failure", failure}};
}

inline SimulationTrace trace_from_json(const nlohmann::json& j) {
  try {
    ConfigEntries entries;
    for (const auto& [k, v] : j.at("scenario").items()) entries.emplace_back(k, v.get<std::string>());
    SimulationTrace trace;
    trace.scenario = scenario_from_entries(entries);
    const int n = trace.scenario.n;
    if (j.at("columns").get<std::vector<std::string>>() != trace_columns(n)) {
      throw FormatError("column list does not match the scenario dimension");
    }
    const std::size_t width = trace_columns(n).size();
    for (const auto& r : j.at("rows")) {
      auto row = r.get<std::vector<double>>();
      if (row.size() != width) throw FormatError("wrong row width in JSON trace");
      trace.samples.push_back(sample_from_row(row, n));
    }
    if (j.contains("failure") && !j.at("failure").is_null()) {
      trace.failure = TraceFailure{j.at("failure").at("t").get<double>(),
                                   j.at("failure").at("message").get<std::string>()};
    }
    if (trace.samples.size() < 2) throw FormatError("trace has fewer than two samples");
    return trace;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed JSON trace: ") + e.what());
  } catch (const ValidationError& e) {
    throw FormatError(std::string("bad scenario in JSON trace: ") + e.what());
  }
}

inline nlohmann::json to_json(const PEReport& r) {
  return {{"delta", r.delta},
          {"mu", r.mu},
          {"lambda_min_per_window", r.lambda_min_per_window},
          {"derivative_epsilon", r.derivative_epsilon},
          {"max_ydot_per_window", r.max_ydot_per_window},
          {"passes_integral", r.passes_integral},
          {"passes_derivative", r.passes_derivative},
          {"k", r.k},
          {"gamma", r.gamma}};
}

inline nlohmann::json to_json(const BoundReport& r) {
  nlohmann::json v = nlohmann::json::array();
  for (const Violation& x : r.violations) v.push_back({{"t", x.t}, {"bound", x.bound}, {"margin", x.margin}});
  auto finite = [](double d) -> nlohmann::json {
    if (std::isfinite(d)) return d;
    return nullptr;
  };
  return {{"delta", r.delta},
          {"gamma_theory", r.gamma_theory},
          {"gamma_empirical", finite(r.gamma_empirical)},
          {"ultimate_bound_theory", finite(r.ultimate_bound_theory)},
          {"ultimate_bound_observed", r.ultimate_bound_observed},
          {"det_floor_theory", r.det_floor_theory},
          {"det_min_observed", finite(r.det_min_observed)},
          {"det_late_min_observed", finite(r.det_late_min_observed)},
          {"cond_bound_theory", finite(r.cond_bound_theory)},
          {"cond_max_observed", finite(r.cond_max_observed)},
          {"jacobi_residual", r.jacobi_residual},
          {"pe_certified", r.pe_certified},
          {"horizon_sufficient", r.horizon_sufficient},
          {"limsup_status", r.horizon_sufficient ? "checked" : "insufficient horizon"},
          {"notes", r.notes},
          {"violations", v}};
}

}  // namespace bearing_obs
