#pragma once

// Run configuration, written in YAML. Nested maps and dotted keys are
// interchangeable ("gains: {k: 0.5}" is the same as "gains.k: 0.5").
//
//   # circular experiment, noise-free
//   gains:
//     k: 0.5
//   x0: [1, 0, 3]
//   M0: [[1, 0, 0], [0, 1, 0], [0, 0, 1]]
//
// Keys that are absent keep the circular-experiment defaults. Unknown or
// repeated keys are rejected.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include <yaml-cpp/yaml.h>

#include "bearing_obs/sim.hpp"

namespace bearing_obs {

struct RunConfig {
  Scenario scenario = circle_scenario();
  std::string csv_path;
  std::string json_path;
  bool pe_check = false;
  bool bounds = false;
  double delta = kCirclePeriod;
  double epsilon = 0.05;
  int verbosity = 1;
};

namespace cfg {

/// Shortest text that parses back to exactly `v`.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(const std::string& key, std::string_view text) {
  const std::string s = trim(text);
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (!s.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (s.empty() || ec != std::errc() || ptr != last) {
    throw ValidationError(key, "expected a number, got '" + s + "'");
  }
  return v;
}

inline std::uint64_t parse_u64(const std::string& key, std::string_view text) {
  const std::string s = trim(text);
  std::uint64_t v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ValidationError(key, "expected a non-negative integer, got '" + s + "'");
  }
  return v;
}

inline int parse_int(const std::string& key, std::string_view text) {
  const std::string s = trim(text);
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (s.empty() || ec != std::errc() || ptr != s.data() + s.size()) {
    throw ValidationError(key, "expected an integer, got '" + s + "'");
  }
  return v;
}

inline bool parse_bool(const std::string& key, std::string_view text) {
  const std::string s = trim(text);
  if (s == "true") return true;
  if (s == "false") return false;
  throw ValidationError(key, "expected true or false, got '" + s + "'");
}

inline std::vector<double> parse_list(const std::string& key, std::string_view text) {
  std::vector<double> out;
  if (trim(text).empty()) return out;
  std::size_t pos = 0;
  while (true) {
    const auto comma = text.find(',', pos);
    out.push_back(parse_double(key, text.substr(pos, comma - pos)));
    if (comma == std::string_view::npos) break;
    pos = comma + 1;
  }
  return out;
}

inline Vector parse_vector(const std::string& key, std::string_view text) {
  const std::vector<double> xs = parse_list(key, text);
  return Eigen::Map<const Vector>(xs.data(), static_cast<Eigen::Index>(xs.size()));
}

inline std::string format_list(const double* data, Eigen::Index count) {
  std::string out;
  for (Eigen::Index i = 0; i < count; ++i) {
    if (i) out += ", ";
    out += format_double(data[i]);
  }
  return out;
}

inline std::string format_vector(const Vector& v) { return format_list(v.data(), v.size()); }

inline std::string format_matrix(const Matrix& m) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> r = m;
  return format_list(r.data(), r.size());
}

inline const char* trajectory_name(TrajectoryKind k) {
  switch (k) {
    case TrajectoryKind::circle: return "circle";
    case TrajectoryKind::constant: return "constant";
    case TrajectoryKind::sphere_sweep: return "sphere_sweep";
  }
  return "circle";
}

inline const char* noise_name(NoiseKind k) {
  return k == NoiseKind::none ? "none" : "uniform_position";
}

}  // namespace cfg

/// Ordered key/value view of a configuration; the shared representation for
/// the text file and the scenario block of JSON traces.
using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

inline ConfigEntries scenario_entries(const Scenario& s) {
  using namespace cfg;
  return {
      {"n", std::to_string(s.n)},
      {"trajectory.kind", trajectory_name(s.trajectory.kind)},
      {"trajectory.amplitude", format_double(s.trajectory.amplitude)},
      {"trajectory.omega", format_double(s.trajectory.omega)},
      {"trajectory.omega2", format_double(s.trajectory.omega2)},
      {"trajectory.velocity", format_vector(s.trajectory.velocity)},
      {"a_true", format_vector(s.a_true)},
      {"x0", format_vector(s.x0)},
      {"gains.k", format_double(s.gains.k)},
      {"gains.k_star", format_double(s.gains.k_star)},
      {"M0", format_matrix(s.M0)},
      {"x_hat_1_0", format_vector(s.x_hat_1_0)},
      {"z_hat_star_0", format_vector(s.z_hat_star_0)},
      {"h", format_double(s.h)},
      {"duration", format_double(s.duration)},
      {"noise.kind", noise_name(s.noise.kind)},
      {"noise.half_width", format_double(s.noise.half_width)},
      {"noise.stream", std::to_string(s.noise.stream)},
      {"seed", std::to_string(s.seed)},
      {"observer.cascade", s.cascade ? "true" : "false"},
  };
}

inline ConfigEntries config_entries(const RunConfig& c) {
  ConfigEntries out = scenario_entries(c.scenario);
  out.emplace_back("output.csv", c.csv_path);
  out.emplace_back("output.json", c.json_path);
  out.emplace_back("analysis.pe_check", c.pe_check ? "true" : "false");
  out.emplace_back("analysis.bounds", c.bounds ? "true" : "false");
  out.emplace_back("analysis.delta", cfg::format_double(c.delta));
  out.emplace_back("analysis.epsilon", cfg::format_double(c.epsilon));
  out.emplace_back("report.verbosity", std::to_string(c.verbosity));
  return out;
}

namespace detail {

/// Applies entries over `c`. Throws ValidationError on unknown, repeated or
/// malformed keys; `allow_run_keys` = false accepts scenario keys only.
inline void apply_entries(RunConfig& c, const ConfigEntries& entries, bool allow_run_keys) {
  using namespace cfg;
  Scenario& s = c.scenario;
  std::map<std::string, bool> seen;
  for (const auto& [key, value] : entries) {
    if (seen[key]) throw ValidationError(key, "key given more than once");
    seen[key] = true;
    const bool run_key = key.rfind("output.", 0) == 0 || key.rfind("analysis.", 0) == 0 ||
                         key.rfind("report.", 0) == 0;
    if (run_key && !allow_run_keys) throw ValidationError(key, "unknown key");

    if (key == "n") s.n = parse_int(key, value);
    else if (key == "trajectory.kind") {
      const std::string v = trim(value);
      if (v == "circle") s.trajectory.kind = TrajectoryKind::circle;
      else if (v == "constant") s.trajectory.kind = TrajectoryKind::constant;
      else if (v == "sphere_sweep") s.trajectory.kind = TrajectoryKind::sphere_sweep;
      else throw ValidationError(key, "unknown trajectory '" + v + "'");
    }
    else if (key == "trajectory.amplitude") s.trajectory.amplitude = parse_double(key, value);
    else if (key == "trajectory.omega") s.trajectory.omega = parse_double(key, value);
    else if (key == "trajectory.omega2") s.trajectory.omega2 = parse_double(key, value);
    else if (key == "trajectory.velocity") s.trajectory.velocity = parse_vector(key, value);
    else if (key == "a_true") s.a_true = parse_vector(key, value);
    else if (key == "x0") s.x0 = parse_vector(key, value);
    else if (key == "gains.k") s.gains.k = parse_double(key, value);
    else if (key == "gains.k_star") s.gains.k_star = parse_double(key, value);
    else if (key == "M0") {
      const std::vector<double> xs = parse_list(key, value);
      const auto m = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(xs.size()))));
      if (m * m != static_cast<Eigen::Index>(xs.size())) {
        throw ValidationError(key, "expected a square number of entries");
      }
      s.M0 = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
          xs.data(), m, m);
    }
    else if (key == "x_hat_1_0") s.x_hat_1_0 = parse_vector(key, value);
    else if (key == "z_hat_star_0") s.z_hat_star_0 = parse_vector(key, value);
    else if (key == "h") s.h = parse_double(key, value);
    else if (key == "duration") s.duration = parse_double(key, value);
    else if (key == "noise.kind") {
      const std::string v = trim(value);
      if (v == "none") s.noise.kind = NoiseKind::none;
      else if (v == "uniform_position") s.noise.kind = NoiseKind::uniform_position;
      else throw ValidationError(key, "unknown noise kind '" + v + "'");
    }
    else if (key == "noise.half_width") s.noise.half_width = parse_double(key, value);
    else if (key == "noise.stream") s.noise.stream = parse_u64(key, value);
    else if (key == "seed") s.seed = parse_u64(key, value);
    else if (key == "observer.cascade") s.cascade = parse_bool(key, value);
    else if (key == "output.csv") c.csv_path = trim(value);
    else if (key == "output.json") c.json_path = trim(value);
    else if (key == "analysis.pe_check") c.pe_check = parse_bool(key, value);
    else if (key == "analysis.bounds") c.bounds = parse_bool(key, value);
    else if (key == "analysis.delta") c.delta = parse_double(key, value);
    else if (key == "analysis.epsilon") c.epsilon = parse_double(key, value);
    else if (key == "report.verbosity") c.verbosity = parse_int(key, value);
    else throw ValidationError(key, "unknown key");
  }
}

}  // namespace detail

namespace detail {

// Flattens a YAML node into dotted keys; sequences (including nested rows)
// become comma-separated lists.
inline void flatten_yaml(const YAML::Node& node, const std::string& prefix, ConfigEntries& out) {
  auto scalars = [&](const YAML::Node& seq, std::string& acc, auto&& self) -> void {
    for (const YAML::Node& item : seq) {
      if (item.IsSequence()) {
        self(item, acc, self);
      } else if (item.IsScalar()) {
        acc += (acc.empty() ? "" : ", ") + item.Scalar();
      } else {
        throw ValidationError(prefix, "expected a list of numbers");
      }
    }
  };
  switch (node.Type()) {
    case YAML::NodeType::Map:
      for (const auto& kv : node) {
        const std::string key = kv.first.as<std::string>();
        flatten_yaml(kv.second, prefix.empty() ? key : prefix + "." + key, out);
      }
      break;
    case YAML::NodeType::Sequence: {
      std::string acc;
      scalars(node, acc, scalars);
      out.emplace_back(prefix, acc);
      break;
    }
    case YAML::NodeType::Scalar:
      out.emplace_back(prefix, node.Scalar());
      break;
    case YAML::NodeType::Null:
      if (!prefix.empty()) out.emplace_back(prefix, "");
      break;
    case YAML::NodeType::Undefined:
      break;
  }
}

}  // namespace detail

/// Parses and validates a run configuration.
inline RunConfig parse_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ValidationError("line " + std::to_string(e.mark.line + 1), e.msg);
  }
  if (!root.IsNull() && !root.IsMap()) throw ValidationError("config", "expected a mapping of keys");
  ConfigEntries entries;
  detail::flatten_yaml(root, "", entries);
  RunConfig c;
  detail::apply_entries(c, entries, true);
  c.scenario.validate();
  if (!(c.delta > 0.0)) throw ValidationError("analysis.delta", "must be positive");
  if (!(c.epsilon > 0.0)) throw ValidationError("analysis.epsilon", "must be positive");
  return c;
}

/// Scenario from key/value pairs (the JSON trace header), defaults from the
/// circular experiment.
inline Scenario scenario_from_entries(const ConfigEntries& entries) {
  RunConfig c;
  detail::apply_entries(c, entries, false);
  c.scenario.validate();
  return c.scenario;
}

/// YAML text that parse_config reads back to the same configuration.
inline std::string to_config_text(const RunConfig& c) {
  const Scenario& s = c.scenario;
  auto put = [](YAML::Emitter& e, double v) -> YAML::Emitter& {
    return e << YAML::Value << cfg::format_double(v);
  };
  auto seq = [](YAML::Emitter& e, const double* data, Eigen::Index count) {
    e << YAML::Flow << YAML::BeginSeq;
    for (Eigen::Index i = 0; i < count; ++i) e << cfg::format_double(data[i]);
    e << YAML::EndSeq;
  };
  auto vec = [&](YAML::Emitter& e, const Vector& v) { seq(e, v.data(), v.size()); };

  YAML::Emitter e;
  e << YAML::BeginMap;
  e << YAML::Key << "n" << YAML::Value << s.n;
  e << YAML::Key << "trajectory" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << cfg::trajectory_name(s.trajectory.kind);
  e << YAML::Key << "amplitude";
  put(e, s.trajectory.amplitude);
  e << YAML::Key << "omega";
  put(e, s.trajectory.omega);
  e << YAML::Key << "omega2";
  put(e, s.trajectory.omega2);
  e << YAML::Key << "velocity" << YAML::Value;
  vec(e, s.trajectory.velocity);
  e << YAML::EndMap;
  e << YAML::Key << "a_true" << YAML::Value;
  vec(e, s.a_true);
  e << YAML::Key << "x0" << YAML::Value;
  vec(e, s.x0);
  e << YAML::Key << "gains" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "k";
  put(e, s.gains.k);
  e << YAML::Key << "k_star";
  put(e, s.gains.k_star);
  e << YAML::EndMap;
  e << YAML::Key << "M0" << YAML::Value << YAML::BeginSeq;
  for (Eigen::Index i = 0; i < s.M0.rows(); ++i) {
    const Vector row = s.M0.row(i).transpose();
    vec(e, row);
  }
  e << YAML::EndSeq;
  e << YAML::Key << "x_hat_1_0" << YAML::Value;
  vec(e, s.x_hat_1_0);
  e << YAML::Key << "z_hat_star_0" << YAML::Value;
  vec(e, s.z_hat_star_0);
  e << YAML::Key << "h";
  put(e, s.h);
  e << YAML::Key << "duration";
  put(e, s.duration);
  e << YAML::Key << "noise" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "kind" << YAML::Value << cfg::noise_name(s.noise.kind);
  e << YAML::Key << "half_width";
  put(e, s.noise.half_width);
  e << YAML::Key << "stream" << YAML::Value << s.noise.stream;
  e << YAML::EndMap;
  e << YAML::Key << "seed" << YAML::Value << s.seed;
  e << YAML::Key << "observer" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "cascade" << YAML::Value << YAML::TrueFalseBool << s.cascade;
  e << YAML::EndMap;
  e << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "csv" << YAML::Value << YAML::DoubleQuoted << c.csv_path;
  e << YAML::Key << "json" << YAML::Value << YAML::DoubleQuoted << c.json_path;
  e << YAML::EndMap;
  e << YAML::Key << "analysis" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "pe_check" << YAML::Value << YAML::TrueFalseBool << c.pe_check;
  e << YAML::Key << "bounds" << YAML::Value << YAML::TrueFalseBool << c.bounds;
  e << YAML::Key << "delta";
  put(e, c.delta);
  e << YAML::Key << "epsilon";
  put(e, c.epsilon);
  e << YAML::EndMap;
  e << YAML::Key << "report" << YAML::Value << YAML::BeginMap;
  e << YAML::Key << "verbosity" << YAML::Value << c.verbosity;
  e << YAML::EndMap;
  e << YAML::EndMap;
  return std::string(e.c_str()) + "\n";
}

}  // namespace bearing_obs
