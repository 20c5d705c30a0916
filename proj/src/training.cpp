// Copyright (c) 2026 the eqgrad authors
// SPDX-License-Identifier: Apache-2.0
#include "eqgrad/training.hpp"

#include <chrono>
#include <cmath>

#include "eqgrad/rng.hpp"

namespace eqgrad {
namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

// Matrix-free estimate of rho(lambda dF/dh + (1-lambda) I) at (h, u) via
// power iteration on the adjoint application (same spectrum).
double rho_lambda_estimate(const EqModule& m, const Vec& h, const Vec& u,
                           double lambda, std::uint64_t seed) {
  RngStream rng(seed, "rho-lambda");
  Vec v(m.dim());
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  const double n0 = norm2(v);
  if (n0 == 0.0) return 0.0;
  scale_in_place(1.0 / n0, v);
  double rho = 0.0;
  for (int it = 0; it < 60; ++it) {
    Vec w = vjp_h(m, h, u, v);
    if (lambda != 1.0) {
      scale_in_place(lambda, w);
      axpy(1.0 - lambda, v, w);
    }
    const double wn = norm2(w);
    if (wn <= 1e-300) return 0.0;
    const double next = std::abs(dot(v, w));
    scale_in_place(1.0 / wn, w);
    v = std::move(w);
    if (it > 2 && std::abs(next - rho) <= 1e-8 * std::max(next, 1e-300)) {
      return next;
    }
    rho = next;
  }
  return rho;
}

}  // namespace

double learning_rate(const TrainConfig& cfg, int step_1based) {
  if (cfg.schedule == LrSchedule::InvSqrt) {
    return cfg.eta0 / std::sqrt(static_cast<double>(step_1based));
  }
  return cfg.eta0;
}

std::vector<std::pair<Vec, Vec>> make_dataset(std::size_t d, int n_pairs,
                                              std::uint64_t seed) {
  if (n_pairs < 1) throw ParameterError("make_dataset: n_pairs must be >= 1");
  if (d < 1) throw ParameterError("make_dataset: d must be >= 1");
  std::vector<std::pair<Vec, Vec>> data;
  data.reserve(static_cast<std::size_t>(n_pairs));
  for (int i = 0; i < n_pairs; ++i) {
    RngStream rng = rng_stream(seed, "dataset", static_cast<std::uint64_t>(i));
    Vec u(d), y(d);
    for (double& x : u) x = rng.normal();
    for (double& x : y) x = rng.normal();
    data.emplace_back(std::move(u), std::move(y));
  }
  return data;
}

TrainTrace sgd_run(const TrainConfig& cfg) {
  if (cfg.steps < 1) throw ParameterError("sgd_run: steps must be >= 1");
  if (cfg.batch_size < 1) throw ParameterError("sgd_run: batch_size must be >= 1");
  if (!(cfg.eta0 >= 0.0)) throw ParameterError("sgd_run: eta0 must be >= 0");

  const auto data = make_dataset(cfg.d, cfg.n_pairs, cfg.dataset_seed);
  EqModule m = make_synthetic(cfg.d, cfg.target_L, cfg.dataset_seed, cfg.kind);
  RngStream batch_rng = rng_stream(cfg.dataset_seed, "batches");

  TrainConfig effective = cfg;
  if (cfg.oracle.method == OracleMethod::BPTT) {
    effective.solver.store_trajectory = true;
  }
  const SolverSpec& fwd_spec = effective.solver;

  TrainTrace trace;
  trace.steps.reserve(static_cast<std::size_t>(cfg.steps));

  for (int n = 1; n <= cfg.steps; ++n) {
    TrainStep row;
    if (cfg.log_full_loss) {
      double full = 0.0;
      for (const auto& [du, dy] : data) {
        const Vec err = sub(solve(m, du, fwd_spec).h_star, dy);
        full += 0.5 * dot(err, err);
      }
      row.loss_full = full / static_cast<double>(data.size());
    }
    std::vector<const std::pair<Vec, Vec>*> batch;
    batch.reserve(static_cast<std::size_t>(cfg.batch_size));
    for (int i = 0; i < cfg.batch_size; ++i) {
      const auto idx = static_cast<std::size_t>(
          batch_rng.next_u64() % static_cast<std::uint64_t>(data.size()));
      batch.push_back(&data[idx]);
    }

    Vec grad_theta(m.theta_dim());
    double loss = 0.0;
    const double inv_bs = 1.0 / static_cast<double>(cfg.batch_size);
    std::vector<FixedPointSolution> sols;
    sols.reserve(batch.size());

    const auto t_fwd = Clock::now();
    try {
      for (const auto* pair : batch) {
        sols.push_back(solve(m, pair->first, fwd_spec));
      }
    } catch (const DivergenceError& e) {
      trace.aborted = true;
      trace.abort_step = n;
      trace.abort_reason = std::string("forward solver diverged: ") + e.what();
      trace.final_module = std::move(m);
      return trace;
    }
    row.forward_wall_ms = ms_since(t_fwd);

    const auto t_bwd = Clock::now();
    Vec grad_exact;
    try {
      for (std::size_t i = 0; i < batch.size(); ++i) {
        const Vec& y = batch[i]->second;
        const Vec err = sub(sols[i].h_star, y);
        loss += 0.5 * dot(err, err) * inv_bs;
        const Vec v = scale(inv_bs, err);
        const PhantomGradient g = evaluate_oracle(m, sols[i], batch[i]->first,
                                                  v, cfg.oracle,
                                                  cfg.solver.lambda_fwd);
        axpy(1.0, g.grad_theta, grad_theta);
        if (cfg.log_exact_compare && cfg.oracle.method != OracleMethod::IFTExact) {
          GradOracleSpec exact_spec = cfg.oracle;
          exact_spec.method = OracleMethod::IFTExact;
          const PhantomGradient e =
              ift_exact(m, sols[i].h_star, batch[i]->first, v, exact_spec);
          if (grad_exact.size() == 0) grad_exact = Vec(m.theta_dim());
          axpy(1.0, e.grad_theta, grad_exact);
        }
      }
    } catch (const DivergenceError& e) {
      trace.aborted = true;
      trace.abort_step = n;
      trace.abort_reason = std::string("gradient oracle diverged: ") + e.what();
      trace.final_module = std::move(m);
      return trace;
    }
    row.backward_wall_ms = ms_since(t_bwd);

    row.loss = loss;
    row.grad_norm = norm2(grad_theta);
    if (grad_exact.size() > 0) {
      row.eps_error = norm2(sub(grad_theta, grad_exact));
      const double ne = norm2(grad_exact);
      if (ne > 0.0 && row.grad_norm > 0.0) {
        row.cosine_vs_exact = dot(grad_theta, grad_exact) / (ne * row.grad_norm);
      }
    }
    if (cfg.log_rho && !sols.empty()) {
      row.rho_F_lambda =
          rho_lambda_estimate(m, sols[0].h_star, batch[0]->first,
                              cfg.oracle.lambda,
                              cfg.dataset_seed ^ static_cast<std::uint64_t>(n));
    }

    const double eta = learning_rate(cfg, n);
    if (eta != 0.0 || cfg.weight_decay != 0.0) {
      Vec theta = get_theta(m);
      Vec update = grad_theta;
      if (cfg.weight_decay != 0.0) axpy(cfg.weight_decay, theta, update);
      axpy(-eta, update, theta);
      set_theta(m, theta);
      renormalize(m);
    }
    trace.steps.push_back(row);
  }
  trace.final_module = std::move(m);
  return trace;
}

double finite_difference_check(const EqModule& m, const Vec& u, const Vec& y,
                               const GradOracleSpec& oracle, double eps_fd,
                               const SolverSpec& forward) {
  if (m.dim() > 32) {
    throw ScaleGuardError("finite_difference_check: dim " +
                          std::to_string(m.dim()) + " exceeds the limit of 32");
  }
  if (forward.tol > 1e-12) {
    throw ParameterError(
        "finite_difference_check: forward tol must be <= 1e-12 so probe noise "
        "stays below the oracle bias");
  }
  if (!(eps_fd > 0.0)) {
    throw ParameterError("finite_difference_check: eps_fd must be > 0");
  }

  const auto loss_at = [&](const EqModule& mod) {
    const FixedPointSolution sol = solve(mod, u, forward);
    const Vec err = sub(sol.h_star, y);
    return 0.5 * dot(err, err);
  };

  SolverSpec fwd = forward;
  if (oracle.method == OracleMethod::BPTT) fwd.store_trajectory = true;
  const FixedPointSolution sol = solve(m, u, fwd);
  const Vec v = sub(sol.h_star, y);
  const PhantomGradient g =
      evaluate_oracle(m, sol, u, v, oracle, forward.lambda_fwd);

  EqModule probe = m;
  Vec theta = get_theta(m);
  double max_rel = 0.0;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double orig = theta[i];
    theta[i] = orig + eps_fd;
    set_theta(probe, theta);
    const double lp = loss_at(probe);
    theta[i] = orig - eps_fd;
    set_theta(probe, theta);
    const double lm = loss_at(probe);
    theta[i] = orig;

    const double fd = (lp - lm) / (2.0 * eps_fd);
    const double gi = g.grad_theta[i];
    const double denom = std::max(std::abs(fd), std::abs(gi));
    if (denom < 1e-12) continue;  // both effectively zero
    max_rel = std::max(max_rel, std::abs(fd - gi) / denom);
  }
  set_theta(probe, theta);
  return max_rel;
}

}  // namespace eqgrad
