// Copyright (c) 2026 the eqgrad authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "eqgrad/experiments.hpp"
#include "eqgrad/training.hpp"

namespace eqgrad {

// Flat key=value config text: one pair per line, '#' comments, blank lines
// ignored. Unknown keys are hard errors; missing keys take documented
// defaults, and every effective value is echoed into the run manifest.
struct KeyValueConfig {
  std::map<std::string, std::string> values;
  std::map<std::string, int> lines;

  static KeyValueConfig parse_string(const std::string& text);
  static KeyValueConfig parse_file(const std::string& path);
};

// Typed accessor over a KeyValueConfig. Tracks which keys were consumed so
// finish() can reject typos, and records the effective (default-filled)
// key=value map for the manifest.
class ConfigReader {
 public:
  explicit ConfigReader(KeyValueConfig cfg) : cfg_(std::move(cfg)) {}

  std::string get_string(const std::string& key, const std::string& dflt);
  double get_double(const std::string& key, double dflt);
  int get_int(const std::string& key, int dflt);
  std::uint64_t get_u64(const std::string& key, std::uint64_t dflt);
  bool get_bool(const std::string& key, bool dflt);
  std::vector<double> get_double_list(const std::string& key,
                                      const std::vector<double>& dflt);
  std::vector<int> get_int_list(const std::string& key,
                                const std::vector<int>& dflt);

  /// Range guards; message names the permitted interval.
  double get_double_in(const std::string& key, double dflt, double lo,
                       double hi, bool lo_open, bool hi_open);
  int get_int_min(const std::string& key, int dflt, int lo);

  /// Throws ConfigError naming every unconsumed key and its line.
  void finish() const;

  const std::map<std::string, std::string>& effective() const {
    return effective_;
  }

 private:
  std::string raw(const std::string& key, const std::string& dflt);
  KeyValueConfig cfg_;
  std::map<std::string, std::string> effective_;
  std::map<std::string, bool> consumed_;
};

// Sub-configs shared by several subcommands (solver.*, oracle-style keys).
SolverSpec solver_from_reader(ConfigReader& r);
GradOracleSpec oracle_from_reader(ConfigReader& r);
SweepSpec sweep_from_reader(ConfigReader& r,
                            ModuleKind default_kind = ModuleKind::AffineTanh);
TrainConfig train_from_reader(ConfigReader& r);

/// FNV-1a over the canonical sorted "k=v\n" rendering; hex string.
std::string config_hash(const std::map<std::string, std::string>& effective);

struct RunManifest {
  std::string tool = "eqgrad";
  std::string version;
  std::string subcommand;
  std::uint64_t seed = 0;
  std::string started_at;
  std::string finished_at;
  std::map<std::string, std::string> config_echo;
  std::string hash;

  std::string to_json() const;
};

/// Parses either flat key=value text or a previously written manifest.json
/// (the config_echo object), so a manifest can be re-run directly.
KeyValueConfig load_config_auto(const std::string& path);

std::string iso8601_utc_now();

}  // namespace eqgrad
