// Copyright (c) 2026 the eqgrad authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "eqgrad/diagnostics.hpp"

namespace eqgrad {

enum class LrSchedule { InvSqrt, Constant };

struct TrainConfig {
  GradOracleSpec oracle;
  SolverSpec solver;
  double eta0 = 0.05;
  LrSchedule schedule = LrSchedule::InvSqrt;
  double weight_decay = 0.0;
  int steps = 100;
  int batch_size = 8;
  std::uint64_t dataset_seed = 1;
  std::size_t d = 16;
  int n_pairs = 64;
  double target_L = 0.9;
  ModuleKind kind = ModuleKind::AffineTanh;
  bool log_rho = false;            // per-step rho(dF_lambda/dh) estimate
  bool log_exact_compare = false;  // co-compute the exact gradient per step
  bool log_full_loss = false;      // per-step loss over the whole dataset
};

struct TrainStep {
  double loss = 0.0;       // minibatch loss at the pre-update parameters
  double loss_full = std::nan("");  // whole-dataset loss, when requested
  double grad_norm = 0.0;
  double rho_F_lambda = std::nan("");
  double eps_error = std::nan("");
  double cosine_vs_exact = std::nan("");
  double forward_wall_ms = 0.0;
  double backward_wall_ms = 0.0;
};

struct TrainTrace {
  std::vector<TrainStep> steps;
  bool aborted = false;
  int abort_step = -1;
  std::string abort_reason;
  EqModule final_module;
};

/// (u, y) pairs with iid standard normal entries, deterministic per seed.
std::vector<std::pair<Vec, Vec>> make_dataset(std::size_t d, int n_pairs,
                                              std::uint64_t seed);

/// Step size at 1-based step n: eta0 / sqrt(n) under InvSqrt, else eta0.
double learning_rate(const TrainConfig& cfg, int step_1based);

/// Minibatch SGD on the regression loss |h* - y|^2 / 2 (batch mean), with
/// eta_n = eta0 / sqrt(n) under InvSqrt, weight decay, and spectral
/// re-normalization of W after every update. Solver divergence aborts the
/// run and returns the partial trace with the failing step index.
TrainTrace sgd_run(const TrainConfig& cfg);

/// Central finite differences of the full loss through the re-solved fixed
/// point versus the oracle gradient; returns the max relative error over
/// theta components. Requires d <= 32 and forward.tol <= 1e-12.
double finite_difference_check(const EqModule& m, const Vec& u, const Vec& y,
                               const GradOracleSpec& oracle, double eps_fd,
                               const SolverSpec& forward);

}  // namespace eqgrad
