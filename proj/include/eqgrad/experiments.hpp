// Copyright (c) 2026 the eqgrad authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "eqgrad/csv.hpp"
#include "eqgrad/training.hpp"

namespace eqgrad {

struct SweepSpec {
  std::size_t d = 128;
  int n_problems = 16;
  std::vector<double> L_h_levels = {0.9};
  std::vector<int> k_values = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 20, 50, 100};
  std::vector<double> lambda_values = {0.25, 0.5, 0.75, 1.0};
  double forward_tol = 1e-5;
  int forward_iters = 100;
  std::uint64_t seed = 1;
  ModuleKind kind = ModuleKind::AffineTanh;

  void validate() const;
};

struct RunResult {
  CsvTable table;  // rows.csv: deterministic per (config, seed)
  // Extra outputs, e.g. wall-clock timings that are inherently run-varying
  // and therefore kept out of rows.csv.
  std::vector<std::pair<std::string, CsvTable>> aux_tables;
  int flagged_failures = 0;
};

/// Cosine-precision sweep: per problem instance, solve forward by fixed-point
/// iteration, build the reference gradient by backprop through the stored
/// trajectory, cross-validate it against the implicit-differentiation solve
/// (20 backward quasi-Newton iterations), then score UPG/NPG over the
/// (k, lambda) grid. One row per (instance, method, k, lambda).
RunResult run_precision_sweep(const SweepSpec& spec, int workers);

/// Backward-solver stability traces: per Lipschitz level, record the
/// quasi-Newton backward solve iterate-by-iterate (objective, relative
/// error, cosine and L1 norm against the dense exact solution), alongside
/// UPG/NPG rows at matched compute budgets.
RunResult run_stability_study(const SweepSpec& spec, int backward_iters,
                              int workers);

/// Dense verification grid: ascent-condition quantities and truncation
/// errors across (k, lambda), the smallest k satisfying the ascent bound,
/// and sampled inner-product positivity counts.
RunResult run_theory_grid(const SweepSpec& spec, int probe_draws, int workers);

struct BenchEntry {
  std::string name;
  TrainConfig config;
};

/// Trains each config and reports final loss, mean wall times, and backward
/// speedup relative to the entry named "ift" (added automatically when
/// missing).
RunResult run_training_benchmark(std::vector<BenchEntry> entries, int workers);

struct FdCheckSpec {
  std::size_t d = 8;
  double target_L = 0.5;
  int n_seeds = 8;
  std::uint64_t seed = 1;
  double eps_fd = 1e-5;
  GradOracleSpec oracle;
  SolverSpec forward;
  ModuleKind kind = ModuleKind::AffineTanh;
};

/// Finite-difference audit of the total-loss gradient across seeds.
RunResult run_fd_check(const FdCheckSpec& spec, int workers);

}  // namespace eqgrad
