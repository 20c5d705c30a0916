// Copyright (c) 2026 the eqgrad authors
// SPDX-License-Identifier: Apache-2.0
#include "eqgrad/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <chrono>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace eqgrad {
namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

double parse_double(const std::string& key, const std::string& s, int line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                      "': cannot parse '" + s + "' as a number");
  }
}

long long parse_int(const std::string& key, const std::string& s, int line) {
  try {
    std::size_t pos = 0;
    const long long v = std::stoll(s, &pos);
    if (pos != s.size()) throw std::invalid_argument("trailing characters");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("line " + std::to_string(line) + ": key '" + key +
                      "': cannot parse '" + s + "' as an integer");
  }
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(s);
  while (std::getline(is, item, ',')) out.push_back(trim(item));
  return out;
}

}  // namespace

KeyValueConfig KeyValueConfig::parse_string(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) +
                        ": expected key=value, got '" + line + "'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    }
    if (cfg.values.count(key)) {
      throw ConfigError("line " + std::to_string(lineno) + ": key '" + key +
                        "' appears more than once");
    }
    cfg.values[key] = value;
    cfg.lines[key] = lineno;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << is.rdbuf();
  return parse_string(buf.str());
}

std::string ConfigReader::raw(const std::string& key, const std::string& dflt) {
  consumed_[key] = true;
  const auto it = cfg_.values.find(key);
  const std::string v = it == cfg_.values.end() ? dflt : it->second;
  effective_[key] = v;
  return v;
}

std::string ConfigReader::get_string(const std::string& key,
                                     const std::string& dflt) {
  return raw(key, dflt);
}

double ConfigReader::get_double(const std::string& key, double dflt) {
  const std::string v = raw(key, format_double(dflt));
  return parse_double(key, v, cfg_.lines.count(key) ? cfg_.lines[key] : 0);
}

int ConfigReader::get_int(const std::string& key, int dflt) {
  const std::string v = raw(key, std::to_string(dflt));
  const long long x = parse_int(key, v, cfg_.lines.count(key) ? cfg_.lines[key] : 0);
  return static_cast<int>(x);
}

std::uint64_t ConfigReader::get_u64(const std::string& key, std::uint64_t dflt) {
  const std::string v = raw(key, std::to_string(dflt));
  try {
    return std::stoull(v);
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': cannot parse '" + v +
                      "' as an unsigned integer");
  }
}

bool ConfigReader::get_bool(const std::string& key, bool dflt) {
  const std::string v = raw(key, dflt ? "true" : "false");
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("key '" + key + "': expected true/false, got '" + v + "'");
}

std::vector<double> ConfigReader::get_double_list(
    const std::string& key, const std::vector<double>& dflt) {
  std::string dflt_str;
  for (std::size_t i = 0; i < dflt.size(); ++i) {
    if (i) dflt_str += ',';
    dflt_str += format_double(dflt[i]);
  }
  const std::string v = raw(key, dflt_str);
  std::vector<double> out;
  for (const std::string& item : split_commas(v)) {
    if (item.empty()) continue;
    out.push_back(parse_double(key, item, cfg_.lines.count(key) ? cfg_.lines[key] : 0));
  }
  if (out.empty()) {
    throw ConfigError("key '" + key + "': list must not be empty");
  }
  return out;
}

std::vector<int> ConfigReader::get_int_list(const std::string& key,
                                            const std::vector<int>& dflt) {
  std::string dflt_str;
  for (std::size_t i = 0; i < dflt.size(); ++i) {
    if (i) dflt_str += ',';
    dflt_str += std::to_string(dflt[i]);
  }
  const std::string v = raw(key, dflt_str);
  std::vector<int> out;
  for (const std::string& item : split_commas(v)) {
    if (item.empty()) continue;
    out.push_back(static_cast<int>(
        parse_int(key, item, cfg_.lines.count(key) ? cfg_.lines[key] : 0)));
  }
  if (out.empty()) {
    throw ConfigError("key '" + key + "': list must not be empty");
  }
  return out;
}

double ConfigReader::get_double_in(const std::string& key, double dflt,
                                   double lo, double hi, bool lo_open,
                                   bool hi_open) {
  const double v = get_double(key, dflt);
  const bool lo_ok = lo_open ? v > lo : v >= lo;
  const bool hi_ok = hi_open ? v < hi : v <= hi;
  if (!lo_ok || !hi_ok) {
    throw ConfigError("key '" + key + "': value " + format_double(v) +
                      " is outside " + (lo_open ? "(" : "[") +
                      format_double(lo) + ", " + format_double(hi) +
                      (hi_open ? ")" : "]"));
  }
  return v;
}

int ConfigReader::get_int_min(const std::string& key, int dflt, int lo) {
  const int v = get_int(key, dflt);
  if (v < lo) {
    throw ConfigError("key '" + key + "': value " + std::to_string(v) +
                      " must be >= " + std::to_string(lo));
  }
  return v;
}

void ConfigReader::finish() const {
  std::string unknown;
  for (const auto& [key, value] : cfg_.values) {
    if (!consumed_.count(key)) {
      if (!unknown.empty()) unknown += "; ";
      unknown += "line " + std::to_string(cfg_.lines.at(key)) + ": unknown key '" +
                 key + "'";
    }
  }
  if (!unknown.empty()) throw ConfigError(unknown);
}

SolverSpec solver_from_reader(ConfigReader& r) {
  SolverSpec s;
  const std::string method = r.get_string("solver", "picard");
  if (method == "picard") {
    s.method = SolveMethod::Picard;
  } else if (method == "damped_picard") {
    s.method = SolveMethod::DampedPicard;
  } else if (method == "broyden") {
    s.method = SolveMethod::Broyden;
  } else {
    throw ConfigError("key 'solver': unknown method '" + method +
                      "' (picard | damped_picard | broyden)");
  }
  s.tol = r.get_double_in("forward_tol", 1e-8, 0.0, 1.0, true, false);
  s.max_iters = r.get_int_min("forward_iters", 100, 1);
  s.lambda_fwd = r.get_double_in("lambda_fwd", 1.0, 0.0, 1.0, true, false);
  s.broyden_memory = r.get_int_min("broyden_memory", 30, 1);
  return s;
}

GradOracleSpec oracle_from_reader(ConfigReader& r) {
  GradOracleSpec o;
  const std::string method = r.get_string("oracle", "ift");
  if (method == "ift") {
    o.method = OracleMethod::IFTExact;
  } else if (method == "bptt") {
    o.method = OracleMethod::BPTT;
  } else if (method == "upg") {
    o.method = OracleMethod::UPG;
  } else if (method == "npg") {
    o.method = OracleMethod::NPG;
  } else if (method == "one_step") {
    o.method = OracleMethod::OneStep;
  } else {
    throw ConfigError("key 'oracle': unknown method '" + method +
                      "' (ift | bptt | upg | npg | one_step)");
  }
  o.k = r.get_int_min("k", 1, 1);
  o.lambda = r.get_double_in("lambda", 1.0, 0.0, 1.0, true, false);
  const std::string adj = r.get_string("adjoint_solver", "picard");
  if (adj == "picard") {
    o.adjoint_solver = AdjointSolver::PicardAdjoint;
  } else if (adj == "broyden") {
    o.adjoint_solver = AdjointSolver::BroydenAdjoint;
  } else {
    throw ConfigError("key 'adjoint_solver': unknown value '" + adj +
                      "' (picard | broyden)");
  }
  o.adjoint_tol = r.get_double_in("adjoint_tol", 1e-10, 0.0, 1.0, true, false);
  o.adjoint_max_iters = r.get_int_min("adjoint_max_iters", 500, 1);
  return o;
}

namespace {

ModuleKind kind_from_reader(ConfigReader& r, ModuleKind dflt) {
  const std::string kind = r.get_string("kind", to_string(dflt));
  try {
    return module_kind_from_string(kind);
  } catch (const ParameterError& e) {
    throw ConfigError(std::string("key 'kind': ") + e.what());
  }
}

}  // namespace

SweepSpec sweep_from_reader(ConfigReader& r, ModuleKind default_kind) {
  SweepSpec s;
  s.d = static_cast<std::size_t>(r.get_int_min("d", 128, 1));
  s.n_problems = r.get_int_min("n_problems", 16, 1);
  s.L_h_levels = r.get_double_list("L_h_levels", {0.9});
  for (double L : s.L_h_levels) {
    if (!(L > 0.0 && L < 1.0)) {
      throw ConfigError("key 'L_h_levels': value " + format_double(L) +
                        " is outside (0, 1)");
    }
  }
  s.k_values = r.get_int_list("k_values", {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 20, 50, 100});
  for (int k : s.k_values) {
    if (k < 1) throw ConfigError("key 'k_values': values must be >= 1");
  }
  s.lambda_values = r.get_double_list("lambda_values", {0.25, 0.5, 0.75, 1.0});
  for (double l : s.lambda_values) {
    if (!(l > 0.0 && l <= 1.0)) {
      throw ConfigError("key 'lambda_values': value " + format_double(l) +
                        " is outside (0, 1]");
    }
  }
  s.forward_tol = r.get_double_in("forward_tol", 1e-5, 0.0, 1.0, true, false);
  s.forward_iters = r.get_int_min("forward_iters", 100, 1);
  s.seed = r.get_u64("seed", 1);
  s.kind = kind_from_reader(r, default_kind);
  return s;
}

TrainConfig train_from_reader(ConfigReader& r) {
  TrainConfig t;
  t.oracle = oracle_from_reader(r);
  t.solver = solver_from_reader(r);
  t.eta0 = r.get_double_in("eta0", 0.05, 0.0, 1e9, false, false);
  const std::string sched = r.get_string("schedule", "inv_sqrt");
  if (sched == "inv_sqrt") {
    t.schedule = LrSchedule::InvSqrt;
  } else if (sched == "constant") {
    t.schedule = LrSchedule::Constant;
  } else {
    throw ConfigError("key 'schedule': unknown value '" + sched +
                      "' (inv_sqrt | constant)");
  }
  t.weight_decay = r.get_double_in("weight_decay", 0.0, 0.0, 1e9, false, false);
  t.steps = r.get_int_min("steps", 100, 1);
  t.batch_size = r.get_int_min("batch_size", 8, 1);
  t.dataset_seed = r.get_u64("dataset_seed", 1);
  t.d = static_cast<std::size_t>(r.get_int_min("d", 16, 1));
  t.n_pairs = r.get_int_min("n_pairs", 64, 1);
  t.target_L = r.get_double_in("target_L", 0.9, 0.0, 1.0, true, true);
  t.kind = kind_from_reader(r, ModuleKind::AffineTanh);
  t.log_rho = r.get_bool("log_rho", false);
  t.log_exact_compare = r.get_bool("log_exact_compare", false);
  return t;
}

std::string config_hash(const std::map<std::string, std::string>& effective) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  const auto feed = [&h](const std::string& s) {
    for (unsigned char c : s) {
      h ^= c;
      h *= 0x100000001B3ULL;
    }
  };
  for (const auto& [k, v] : effective) {
    feed(k);
    feed("=");
    feed(v);
    feed("\n");
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return std::string(buf);
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["tool"] = tool;
  j["version"] = version;
  j["subcommand"] = subcommand;
  j["seed"] = seed;
  j["config_hash"] = hash;
  j["started_at"] = started_at;
  j["finished_at"] = finished_at;
  j["config_echo"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : config_echo) j["config_echo"][k] = v;
  return j.dump(2) + "\n";
}

KeyValueConfig load_config_auto(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << is.rdbuf();
  const std::string text = buf.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '{') {
    // Re-run path: pull config_echo back out of a manifest.
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
      throw ConfigError("manifest '" + path + "': " + e.what());
    }
    if (!j.contains("config_echo") || !j["config_echo"].is_object()) {
      throw ConfigError("manifest '" + path + "' has no config_echo object");
    }
    KeyValueConfig cfg;
    int line = 0;
    for (const auto& [k, v] : j["config_echo"].items()) {
      cfg.values[k] = v.get<std::string>();
      cfg.lines[k] = ++line;
    }
    return cfg;
  }
  return KeyValueConfig::parse_string(text);
}

std::string iso8601_utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return std::string(buf);
}

}  // namespace eqgrad
