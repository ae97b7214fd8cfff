#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "trapsim/errors.hpp"
#include "trapsim/rng.hpp"

namespace trapsim {

// Flat key=value experiment description. Grammar: one `key = value` per
// line, `#` starts a comment, keys are dotted, list values are
// comma-separated. Unknown and duplicate keys are errors so a config file
// fully records an experiment.
struct ExperimentConfig {
  std::string kind;  // aging | limit-aging | scaling-table | assumption-diagnostics | marginal-convergence

  std::string env_family = "pareto";
  double env_alpha = 0.5;
  uint64_t env_seed = 0;
  bool env_seed_set = false;

  std::string walk_kind = "srw";
  int walk_d = 3;
  double walk_p = 0.5;
  double walk_beta = 0.7;
  int64_t walk_kmax = int64_t{1} << 20;
  std::string walk_table_path;

  std::vector<std::string> modes = {"R"};
  std::vector<double> theta_grid;
  std::vector<double> t_grid;
  std::vector<int64_t> n_grid;
  std::vector<double> eps_grid;

  int64_t replicas = 1000;
  uint64_t seed = 0;
  bool seed_set = false;
  int workers = 0;  // 0 = auto
  double delta0 = 1e-4;

  int64_t env_count = 100;
  int64_t m_per_env = 500;

  int64_t bundle_paths = 4000;
  int64_t bundle_n_max = 0;  // 0 = derive from grids

  std::string out_dir = ".";
  std::vector<std::string> formats = {"csv", "json"};
  bool plot = false;
};

namespace detail {

inline std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    double x = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (...) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

inline int64_t parse_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    int64_t x = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (...) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
}

inline uint64_t parse_u64(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    uint64_t x = std::stoull(v, &pos);
    if (pos != v.size()) throw std::invalid_argument("trailing");
    return x;
  } catch (...) {
    throw ConfigError(key + ": expected an unsigned integer, got '" + v + "'");
  }
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'");
}

}  // namespace detail

inline void apply_config_entry(ExperimentConfig& c, const std::string& key,
                               const std::string& value) {
  using detail::parse_bool;
  using detail::parse_int;
  using detail::parse_real;
  using detail::parse_u64;
  using detail::split_list;

  if (key == "kind") c.kind = value;
  else if (key == "env.family") c.env_family = value;
  else if (key == "env.alpha") c.env_alpha = parse_real(key, value);
  else if (key == "env.seed") { c.env_seed = parse_u64(key, value); c.env_seed_set = true; }
  else if (key == "walk.kind") c.walk_kind = value;
  else if (key == "walk.d") c.walk_d = static_cast<int>(parse_int(key, value));
  else if (key == "walk.p") c.walk_p = parse_real(key, value);
  else if (key == "walk.beta") c.walk_beta = parse_real(key, value);
  else if (key == "walk.kmax") c.walk_kmax = parse_int(key, value);
  else if (key == "walk.table_path") c.walk_table_path = value;
  else if (key == "modes") c.modes = split_list(value);
  else if (key == "theta_grid") {
    c.theta_grid.clear();
    for (const auto& s : split_list(value)) c.theta_grid.push_back(parse_real(key, s));
  } else if (key == "t_grid") {
    c.t_grid.clear();
    for (const auto& s : split_list(value)) c.t_grid.push_back(parse_real(key, s));
  } else if (key == "n_grid") {
    c.n_grid.clear();
    for (const auto& s : split_list(value)) c.n_grid.push_back(parse_int(key, s));
  } else if (key == "eps_grid") {
    c.eps_grid.clear();
    for (const auto& s : split_list(value)) c.eps_grid.push_back(parse_real(key, s));
  }
  else if (key == "M") c.replicas = parse_int(key, value);
  else if (key == "seed") { c.seed = parse_u64(key, value); c.seed_set = true; }
  else if (key == "workers") c.workers = static_cast<int>(parse_int(key, value));
  else if (key == "delta0") c.delta0 = parse_real(key, value);
  else if (key == "quenched.env_count") c.env_count = parse_int(key, value);
  else if (key == "quenched.m_per_env") c.m_per_env = parse_int(key, value);
  else if (key == "bundle.paths") c.bundle_paths = parse_int(key, value);
  else if (key == "bundle.n_max") c.bundle_n_max = parse_int(key, value);
  else if (key == "out") c.out_dir = value;
  else if (key == "formats") c.formats = split_list(value);
  else if (key == "plot") c.plot = parse_bool(key, value);
  else throw ConfigError("unknown key '" + key + "'");
}

inline ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file '" + path + "'");
  ExperimentConfig c;
  std::set<std::string> seen;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = detail::trim(line);
    if (s.empty() || s[0] == '#') continue;
    size_t eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = detail::trim(s.substr(0, eq));
    std::string value = detail::trim(s.substr(eq + 1));
    if (key.empty()) throw ConfigError(path + ":" + std::to_string(lineno) + ": empty key");
    if (!seen.insert(key).second)
      throw ConfigError(path + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    apply_config_entry(c, key, value);
  }
  return c;
}

inline const std::set<std::string>& known_kinds() {
  static const std::set<std::string> kinds = {
      "aging", "limit-aging", "scaling-table", "assumption-diagnostics",
      "marginal-convergence"};
  return kinds;
}

// Cross-field validation; call after the kind is fixed.
inline void validate_config(const ExperimentConfig& c) {
  if (!known_kinds().count(c.kind))
    throw ConfigError("kind: expected one of aging, limit-aging, scaling-table, "
                      "assumption-diagnostics, marginal-convergence; got '" + c.kind + "'");
  if (!c.seed_set) throw ConfigError("seed: mandatory, no wall-clock default");
  if (!(c.env_alpha > 0.0 && c.env_alpha < 1.0))
    throw ConfigError("env.alpha: must be in (0,1)");
  if (c.env_family != "pareto" && c.env_family != "log_pareto")
    throw ConfigError("env.family: expected pareto or log_pareto, got '" + c.env_family + "'");
  if (c.walk_kind != "srw" && c.walk_kind != "asym1d" && c.walk_kind != "heavy1d" &&
      c.walk_kind != "table")
    throw ConfigError("walk.kind: expected srw, asym1d, heavy1d or table, got '" +
                      c.walk_kind + "'");
  if (c.replicas < 1) throw ConfigError("M: must be >= 1");
  if (c.workers < 0) throw ConfigError("workers: must be >= 0");
  for (const auto& f : c.formats)
    if (f != "csv" && f != "json" && f != "svg")
      throw ConfigError("formats: expected csv, json or svg, got '" + f + "'");

  const bool needs_theta = c.kind == "aging" || c.kind == "limit-aging" ||
                           c.kind == "assumption-diagnostics";
  if (needs_theta && c.theta_grid.empty())
    throw ConfigError("theta_grid: must be nonempty for kind " + c.kind);
  for (double th : c.theta_grid)
    if (!(th >= 0.0)) throw ConfigError("theta_grid: values must be >= 0");
  for (double e : c.eps_grid)
    if (!(e > 0.0 && e < 1.0)) throw ConfigError("eps_grid: values must be in (0,1)");
  for (int64_t n : c.n_grid)
    if (n < 0) throw ConfigError("n_grid: values must be >= 0");
  for (double t : c.t_grid)
    if (!(t > 0.0)) throw ConfigError("t_grid: values must be > 0");

  if (c.kind == "aging") {
    if (c.t_grid.empty() == c.n_grid.empty())
      throw ConfigError("aging: provide exactly one of t_grid, n_grid");
    for (const auto& m : c.modes)
      if (m != "R" && m != "Pi" && m != "Pi_laplace" && m != "Omega")
        throw ConfigError("modes: expected subset of R, Pi, Pi_laplace, Omega; got '" + m + "'");
    if (c.modes.empty()) throw ConfigError("modes: must be nonempty");
  }
  if (c.kind == "limit-aging") {
    if (!(c.delta0 > 0.0)) throw ConfigError("delta0: must be positive");
    for (const auto& m : c.modes)
      if (m != "R" && m != "Pi_laplace" && m != "Omega")
        throw ConfigError("modes: limit-aging supports R, Pi_laplace, Omega; got '" + m + "'");
  }
  if (c.kind == "scaling-table" || c.kind == "marginal-convergence") {
    if (c.eps_grid.empty()) throw ConfigError("eps_grid: must be nonempty for kind " + c.kind);
  }
  if (c.kind == "assumption-diagnostics") {
    if (c.n_grid.empty()) throw ConfigError("n_grid: must be nonempty for kind " + c.kind);
    if (c.env_count < 2) throw ConfigError("quenched.env_count: must be >= 2");
    if (c.m_per_env < 2) throw ConfigError("quenched.m_per_env: must be >= 2");
  }
  if (c.bundle_paths < 1) throw ConfigError("bundle.paths: must be >= 1");
  if (c.bundle_n_max < 0) throw ConfigError("bundle.n_max: must be >= 0");
}

// Canonical serialization of the effective config; hashed into run metadata.
inline std::string canonical_config(const ExperimentConfig& c) {
  std::ostringstream out;
  auto num = [](double v) {
    std::ostringstream s;
    s.precision(17);
    s << v;
    return s.str();
  };
  out << "kind=" << c.kind << "\n";
  out << "env.family=" << c.env_family << "\n";
  out << "env.alpha=" << num(c.env_alpha) << "\n";
  if (c.env_seed_set) out << "env.seed=" << c.env_seed << "\n";
  out << "walk.kind=" << c.walk_kind << "\n";
  out << "walk.d=" << c.walk_d << "\n";
  out << "walk.p=" << num(c.walk_p) << "\n";
  out << "walk.beta=" << num(c.walk_beta) << "\n";
  out << "walk.kmax=" << c.walk_kmax << "\n";
  if (!c.walk_table_path.empty()) out << "walk.table_path=" << c.walk_table_path << "\n";
  out << "modes=";
  for (size_t i = 0; i < c.modes.size(); ++i) out << (i ? "," : "") << c.modes[i];
  out << "\ntheta_grid=";
  for (size_t i = 0; i < c.theta_grid.size(); ++i) out << (i ? "," : "") << num(c.theta_grid[i]);
  out << "\nt_grid=";
  for (size_t i = 0; i < c.t_grid.size(); ++i) out << (i ? "," : "") << num(c.t_grid[i]);
  out << "\nn_grid=";
  for (size_t i = 0; i < c.n_grid.size(); ++i) out << (i ? "," : "") << c.n_grid[i];
  out << "\neps_grid=";
  for (size_t i = 0; i < c.eps_grid.size(); ++i) out << (i ? "," : "") << num(c.eps_grid[i]);
  out << "\nM=" << c.replicas << "\nseed=" << c.seed << "\ndelta0=" << num(c.delta0)
      << "\nquenched.env_count=" << c.env_count << "\nquenched.m_per_env=" << c.m_per_env
      << "\nbundle.paths=" << c.bundle_paths << "\nbundle.n_max=" << c.bundle_n_max << "\n";
  return out.str();
}

inline std::string config_hash(const ExperimentConfig& c) {
  std::string s = canonical_config(c);
  uint64_t h = 0x7472617073696d00ULL;
  for (unsigned char ch : s) h = hash_combine(h, ch);
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace trapsim
