// Copyright (c) 2026 the eqgrad authors
// SPDX-License-Identifier: Apache-2.0
#include "eqgrad/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <thread>

#include "eqgrad/config.hpp"
#include "eqgrad/rng.hpp"

namespace eqgrad {
namespace {

constexpr double kNormCap = 1e30;  // CSV sentinel for runaway norms

using Row = std::vector<std::string>;

// Runs fn(0..n-1) on a bounded pool. Tasks write into per-index slots, so
// results are independent of scheduling; exceptions are rethrown after join.
void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n));
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (;;) {
        const int i = next.fetch_add(1);
        if (i >= n) return;
        try {
          fn(i);
        } catch (...) {
          errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

double capped(double v, bool* hit) {
  if (!std::isfinite(v) || std::abs(v) > kNormCap) {
    if (hit) *hit = true;
    return std::copysign(kNormCap, std::isnan(v) ? 1.0 : v);
  }
  return v;
}

std::uint64_t instance_seed(std::uint64_t master, std::string_view scope,
                            std::uint64_t level, std::uint64_t index) {
  std::string label(scope);
  label += '/';
  label += std::to_string(level);
  return rng_stream(master, label, index).next_u64();
}

Vec normal_vec(RngStream& rng, std::size_t d) {
  Vec v(d);
  for (double& x : v) x = rng.normal();
  return v;
}

std::string method_name(OracleMethod m) {
  switch (m) {
    case OracleMethod::IFTExact: return "ift";
    case OracleMethod::BPTT: return "bptt";
    case OracleMethod::UPG: return "upg";
    case OracleMethod::NPG: return "npg";
    case OracleMethod::OneStep: return "one_step";
  }
  return "?";
}

std::map<std::string, std::string> sweep_echo(const SweepSpec& s) {
  std::map<std::string, std::string> e;
  e["d"] = std::to_string(s.d);
  e["n_problems"] = std::to_string(s.n_problems);
  std::string levels;
  for (std::size_t i = 0; i < s.L_h_levels.size(); ++i) {
    if (i) levels += ',';
    levels += format_double(s.L_h_levels[i]);
  }
  e["L_h_levels"] = levels;
  std::string ks;
  for (std::size_t i = 0; i < s.k_values.size(); ++i) {
    if (i) ks += ',';
    ks += std::to_string(s.k_values[i]);
  }
  e["k_values"] = ks;
  std::string lambdas;
  for (std::size_t i = 0; i < s.lambda_values.size(); ++i) {
    if (i) lambdas += ',';
    lambdas += format_double(s.lambda_values[i]);
  }
  e["lambda_values"] = lambdas;
  e["forward_tol"] = format_double(s.forward_tol);
  e["forward_iters"] = std::to_string(s.forward_iters);
  e["seed"] = std::to_string(s.seed);
  e["kind"] = to_string(s.kind);
  return e;
}

}  // namespace

void SweepSpec::validate() const {
  if (d < 1) throw ParameterError("sweep: d must be >= 1");
  if (n_problems < 1) throw ParameterError("sweep: n_problems must be >= 1");
  for (double L : L_h_levels) {
    if (!(L > 0.0 && L < 1.0)) {
      throw ParameterError("sweep: L_h levels must lie in (0, 1)");
    }
  }
  for (double l : lambda_values) {
    if (!(l > 0.0 && l <= 1.0)) {
      throw ParameterError("sweep: lambda values must lie in (0, 1]");
    }
  }
  for (int k : k_values) {
    if (k < 1) throw ParameterError("sweep: k values must be >= 1");
  }
  if (!(forward_tol > 0.0)) throw ParameterError("sweep: forward_tol must be > 0");
  if (forward_iters < 1) throw ParameterError("sweep: forward_iters must be >= 1");
}

RunResult run_precision_sweep(const SweepSpec& spec, int workers) {
  spec.validate();
  const std::string hash = config_hash(sweep_echo(spec));

  CsvTable table({"seed", "instance", "config_hash", "L_h", "method", "k",
                  "lambda", "cosine_vs_exact", "eps_error", "l1_exact",
                  "l1_phantom", "forward_residual", "forward_iterations",
                  "crossval_cosine", "failed"});

  const int n_levels = static_cast<int>(spec.L_h_levels.size());
  const int n_cells = n_levels * spec.n_problems;
  std::vector<std::vector<Row>> slots(static_cast<std::size_t>(n_cells));
  std::atomic<int> flagged{0};

  parallel_for(n_cells, workers, [&](int cell_idx) {
    const int level = cell_idx / spec.n_problems;
    const int inst = cell_idx % spec.n_problems;
    const double L_h = spec.L_h_levels[static_cast<std::size_t>(level)];
    auto& rows = slots[static_cast<std::size_t>(cell_idx)];

    const std::uint64_t mseed =
        instance_seed(spec.seed, "precision", static_cast<std::uint64_t>(level),
                      static_cast<std::uint64_t>(inst));
    const auto fail_row = [&](const char* stage) {
      rows.push_back({cell(spec.seed), cell(inst), hash, cell(L_h),
                      cell(stage), cell(0), cell(std::nan("")),
                      cell(std::nan("")), cell(std::nan("")), cell(std::nan("")),
                      cell(std::nan("")), cell(std::nan("")), cell(0),
                      cell(std::nan("")), cell(true)});
      flagged.fetch_add(1);
    };

    try {
      const EqModule m = make_synthetic(spec.d, L_h, mseed, spec.kind);
      RngStream data_rng = rng_stream(mseed, "data");
      const Vec u = normal_vec(data_rng, spec.d);
      const Vec y = normal_vec(data_rng, spec.d);

      SolverSpec fwd;
      fwd.method = SolveMethod::Picard;
      fwd.tol = spec.forward_tol;
      fwd.max_iters = spec.forward_iters;
      fwd.store_trajectory = true;
      const FixedPointSolution sol = picard_solve(m, u, fwd, Vec(spec.d));
      const Vec v = sub(sol.h_star, y);

      const PhantomGradient reference = bptt_exact(m, sol, u, v, 1.0);

      GradOracleSpec ift_spec;
      ift_spec.method = OracleMethod::IFTExact;
      ift_spec.adjoint_solver = AdjointSolver::BroydenAdjoint;
      ift_spec.adjoint_max_iters = 20;
      ift_spec.adjoint_tol = 1e-12;
      const PhantomGradient crossval = ift_exact(m, sol.h_star, u, v, ift_spec);
      const double crossval_cosine =
          compare_gradients(reference, crossval).cosine_vs_exact;

      for (const OracleMethod method : {OracleMethod::UPG, OracleMethod::NPG}) {
        for (const int k : spec.k_values) {
          for (const double lambda : spec.lambda_values) {
            const PhantomGradient cand =
                method == OracleMethod::UPG
                    ? upg(m, sol.h_star, u, v, k, lambda)
                    : npg(m, sol.h_star, u, v, k, lambda);
            const DiagnosticsRecord cmp = compare_gradients(reference, cand);
            rows.push_back({cell(spec.seed), cell(inst), hash, cell(L_h),
                            method_name(method), cell(k), cell(lambda),
                            cell(cmp.cosine_vs_exact), cell(cmp.eps_error),
                            cell(cmp.l1_exact), cell(cmp.l1_phantom),
                            cell(sol.rel_residual), cell(sol.iterations),
                            cell(crossval_cosine), cell(false)});
          }
        }
      }
    } catch (const DivergenceError&) {
      fail_row("diverged");
    } catch (const ZeroVectorError&) {
      fail_row("degenerate");
    }
  });

  for (const auto& rows : slots) {
    for (const Row& r : rows) table.add_row(r);
  }
  return {std::move(table), {}, flagged.load()};
}

RunResult run_stability_study(const SweepSpec& spec, int backward_iters,
                              int workers) {
  spec.validate();
  if (backward_iters < 1) {
    throw ParameterError("stability: backward_iters must be >= 1");
  }
  if (spec.d > 256) {
    throw ScaleGuardError("stability: d > 256 cannot use the dense reference");
  }
  auto echo = sweep_echo(spec);
  echo["backward_iters"] = std::to_string(backward_iters);
  const std::string hash = config_hash(echo);

  CsvTable table({"seed", "instance", "config_hash", "L_h", "series", "step",
                  "lambda", "objective", "rel_error", "cosine_vs_exact",
                  "eps_error", "l1_value", "l1_exact", "forward_residual",
                  "capped", "failed"});

  const int n_cells =
      static_cast<int>(spec.L_h_levels.size()) * spec.n_problems;
  std::vector<std::vector<Row>> slots(static_cast<std::size_t>(n_cells));
  std::atomic<int> flagged{0};

  parallel_for(n_cells, workers, [&](int cell_idx) {
    const int level = cell_idx / spec.n_problems;
    const int inst = cell_idx % spec.n_problems;
    const double L_h = spec.L_h_levels[static_cast<std::size_t>(level)];
    auto& rows = slots[static_cast<std::size_t>(cell_idx)];

    const std::uint64_t mseed =
        instance_seed(spec.seed, "stability", static_cast<std::uint64_t>(level),
                      static_cast<std::uint64_t>(inst));
    const EqModule m = make_synthetic(spec.d, L_h, mseed, spec.kind);
    RngStream data_rng = rng_stream(mseed, "data");
    const Vec u = normal_vec(data_rng, spec.d);
    const Vec y = normal_vec(data_rng, spec.d);

    SolverSpec fwd;
    fwd.method = SolveMethod::Picard;
    fwd.tol = spec.forward_tol;
    fwd.max_iters = spec.forward_iters;
    FixedPointSolution sol;
    try {
      sol = picard_solve(m, u, fwd, Vec(spec.d));
    } catch (const DivergenceError&) {
      rows.push_back({cell(spec.seed), cell(inst), hash, cell(L_h), "forward",
                      cell(0), cell(std::nan("")), cell(std::nan("")),
                      cell(std::nan("")), cell(std::nan("")), cell(std::nan("")),
                      cell(std::nan("")), cell(std::nan("")), cell(std::nan("")),
                      cell(false), cell(true)});
      flagged.fetch_add(1);
      return;
    }
    const Vec v = sub(sol.h_star, y);

    // Dense ground truth at the solver output point.
    const auto [j_h, j_theta] = materialize_jacobians(m, sol.h_star, u);
    const Mat i_minus_jh = sub(Mat::identity(spec.d), j_h);
    const Vec g_exact = dense_solve(i_minus_jh, v);
    const double l1_g_exact = norm1(g_exact);
    PhantomGradient exact_grad;
    exact_grad.grad_theta = matvec(j_theta, g_exact);
    exact_grad.grad_u = vjp_u(m, sol.h_star, u, g_exact);
    const Vec exact_cat = concat(exact_grad.grad_theta, exact_grad.grad_u);
    const double l1_exact_grad = norm1(exact_cat);

    // Backward quasi-Newton trace, run for the full budget.
    GradOracleSpec adj;
    adj.adjoint_solver = AdjointSolver::BroydenAdjoint;
    adj.adjoint_max_iters = backward_iters;
    adj.adjoint_tol = 1e-300;
    std::vector<Vec> trace;
    bool adjoint_diverged = false;
    try {
      AdjointSolveResult res = solve_adjoint(m, sol.h_star, u, v, adj, true);
      trace = std::move(res.trace);
    } catch (const DivergenceError& e) {
      adjoint_diverged = true;
      trace.reserve(e.iterate_trace.size());
      for (const auto& it : e.iterate_trace) trace.emplace_back(it);
    }

    const bool zero_v = norm2(v) == 0.0;
    for (std::size_t i = 0; i < trace.size(); ++i) {
      const Vec& g_i = trace[i];
      bool hit = false;
      const Vec resid = sub(matvec(i_minus_jh, g_i), v);
      const double objective = capped(norm2(resid), &hit);
      const double gn = norm2(g_i);
      const double rel = capped(gn > 0.0 ? objective / gn : objective, &hit);
      double cosine = std::nan("");
      if (!zero_v && norm2(g_exact) > 0.0 && gn > 0.0) {
        cosine = cosine_similarity(g_i, g_exact);
      } else if (zero_v) {
        cosine = 0.0;
      }
      const double l1 = capped(norm1(g_i), &hit);
      rows.push_back({cell(spec.seed), cell(inst), hash, cell(L_h),
                      "broyden_adjoint", cell(static_cast<int>(i)),
                      cell(std::nan("")), cell(objective), cell(rel),
                      cell(cosine), cell(std::nan("")), cell(l1),
                      cell(capped(l1_g_exact, nullptr)), cell(sol.rel_residual),
                      cell(hit), cell(false)});
    }
    if (adjoint_diverged) {
      rows.push_back({cell(spec.seed), cell(inst), hash, cell(L_h),
                      "broyden_adjoint", cell(static_cast<int>(trace.size())),
                      cell(std::nan("")), cell(kNormCap), cell(kNormCap),
                      cell(std::nan("")), cell(std::nan("")), cell(kNormCap),
                      cell(capped(l1_g_exact, nullptr)), cell(sol.rel_residual),
                      cell(true), cell(false)});
    }

    // Phantom estimates at matched compute budgets.
    const bool exact_zero = l1_exact_grad == 0.0;
    for (const OracleMethod method : {OracleMethod::UPG, OracleMethod::NPG}) {
      for (const double lambda : spec.lambda_values) {
        for (int k = 1; k <= backward_iters; ++k) {
          bool hit = false;
          try {
            const PhantomGradient cand =
                method == OracleMethod::UPG
                    ? upg(m, sol.h_star, u, v, k, lambda)
                    : npg(m, sol.h_star, u, v, k, lambda);
            const Vec cat = concat(cand.grad_theta, cand.grad_u);
            double cosine = std::nan("");
            double eps = std::nan("");
            if (!exact_zero && norm2(cat) > 0.0) {
              cosine = cosine_similarity(exact_cat, cat);
              eps = capped(norm2(sub(cat, exact_cat)), &hit);
            } else if (exact_zero) {
              cosine = 0.0;
              eps = capped(norm2(cat), &hit);
            }
            rows.push_back({cell(spec.seed), cell(inst), hash, cell(L_h),
                            method_name(method), cell(k), cell(lambda),
                            cell(std::nan("")), cell(std::nan("")), cell(cosine),
                            cell(eps), cell(capped(norm1(cat), &hit)),
                            cell(capped(l1_exact_grad, nullptr)),
                            cell(sol.rel_residual), cell(hit), cell(false)});
          } catch (const DivergenceError&) {
            rows.push_back({cell(spec.seed), cell(inst), hash, cell(L_h),
                            method_name(method), cell(k), cell(lambda),
                            cell(std::nan("")), cell(std::nan("")),
                            cell(std::nan("")), cell(std::nan("")),
                            cell(kNormCap), cell(capped(l1_exact_grad, nullptr)),
                            cell(sol.rel_residual), cell(true), cell(false)});
          }
        }
      }
    }
  });

  for (const auto& rows : slots) {
    for (const Row& r : rows) table.add_row(r);
  }
  return {std::move(table), {}, flagged.load()};
}

RunResult run_theory_grid(const SweepSpec& spec, int probe_draws, int workers) {
  spec.validate();
  if (probe_draws < 1) {
    throw ParameterError("theory-grid: probe_draws must be >= 1");
  }
  if (spec.d > 256) {
    throw ScaleGuardError("theory-grid: d > 256 exceeds the dense limit");
  }
  auto echo = sweep_echo(spec);
  echo["probe_draws"] = std::to_string(probe_draws);
  const std::string hash = config_hash(echo);

  CsvTable table({"seed", "instance", "config_hash", "L_h", "k", "lambda",
                  "lhs_ascent", "lhs_ascent_fro", "rhs_ascent", "lhs_reduced",
                  "rhs_reduced", "satisfied", "smallest_k_satisfied",
                  "trunc_error", "inner_min", "inner_positive", "probes",
                  "failed"});

  const int n_cells =
      static_cast<int>(spec.L_h_levels.size()) * spec.n_problems;
  std::vector<std::vector<Row>> slots(static_cast<std::size_t>(n_cells));

  const int k_max = *std::max_element(spec.k_values.begin(), spec.k_values.end());

  parallel_for(n_cells, workers, [&](int cell_idx) {
    const int level = cell_idx / spec.n_problems;
    const int inst = cell_idx % spec.n_problems;
    const double L_h = spec.L_h_levels[static_cast<std::size_t>(level)];
    auto& rows = slots[static_cast<std::size_t>(cell_idx)];

    const std::uint64_t mseed =
        instance_seed(spec.seed, "theory", static_cast<std::uint64_t>(level),
                      static_cast<std::uint64_t>(inst));
    const EqModule m = make_synthetic(spec.d, L_h, mseed, spec.kind);
    RngStream data_rng = rng_stream(mseed, "data");
    const Vec u = normal_vec(data_rng, spec.d);

    SolverSpec fwd;
    fwd.method = SolveMethod::Picard;
    fwd.tol = spec.forward_tol;
    fwd.max_iters = spec.forward_iters;
    const FixedPointSolution sol = picard_solve(m, u, fwd, Vec(spec.d));

    const auto [j_h, j_theta] = materialize_jacobians(m, sol.h_star, u);
    const Mat i_minus_jh = sub(Mat::identity(spec.d), j_h);
    const Mat exact_map = gemm(j_theta, dense_inverse(i_minus_jh));
    const SvdExtremes sv = svd_extremes(j_theta);
    const double rhs =
        sv.sigma_min < 1e-300 ? 0.0 : sv.sigma_min * sv.sigma_min / sv.sigma_max;

    // Probe set shared by every cell of this instance.
    RngStream probe_rng = rng_stream(mseed, "probes");
    std::vector<Vec> probes;
    probes.reserve(static_cast<std::size_t>(probe_draws));
    for (int p = 0; p < probe_draws; ++p) {
      probes.push_back(normal_vec(probe_rng, spec.d));
    }

    for (const double lambda : spec.lambda_values) {
      const Mat b = damped_jacobian(j_h, lambda);
      // Incremental scan for the smallest k meeting the ascent bound.
      int smallest_k = 0;
      {
        Mat sum = Mat::identity(spec.d);
        Mat power = Mat::identity(spec.d);
        for (int k = 1; k <= k_max; ++k) {
          if (k > 1) {
            power = gemm(power, b);
            sum = add(sum, power);
          }
          const Mat a_mat = scale(lambda, gemm(j_theta, sum));
          const double lhs = spectral_norm(sub(gemm(a_mat, i_minus_jh), j_theta));
          if (lhs < rhs) {
            smallest_k = k;
            break;
          }
        }
      }

      for (const int k : spec.k_values) {
        const DiagnosticsRecord rec =
            descent_condition_check(m, sol.h_star, u, k, lambda, nullptr, mseed);
        const double trunc = neumann_truncation_error(m, sol.h_star, u, k, lambda);
        const bool satisfied = rec.lhs_ascent < rec.rhs_ascent;

        double inner_min = std::numeric_limits<double>::infinity();
        int inner_positive = 0;
        const Mat a_mat = backward_matrix(j_theta, j_h, k, lambda);
        for (const Vec& p : probes) {
          const double ip = dot(matvec(a_mat, p), matvec(exact_map, p));
          inner_min = std::min(inner_min, ip);
          if (ip > 0.0) ++inner_positive;
        }

        rows.push_back({cell(spec.seed), cell(inst), hash, cell(L_h), cell(k),
                        cell(lambda), cell(rec.lhs_ascent),
                        cell(rec.lhs_ascent_fro), cell(rec.rhs_ascent),
                        cell(rec.lhs_reduced), cell(rec.rhs_reduced),
                        cell(satisfied), cell(smallest_k), cell(trunc),
                        cell(inner_min), cell(inner_positive),
                        cell(probe_draws), cell(false)});
      }
    }
  });

  for (const auto& rows : slots) {
    for (const Row& r : rows) table.add_row(r);
  }
  return {std::move(table), {}, 0};
}

RunResult run_training_benchmark(std::vector<BenchEntry> entries, int workers) {
  if (entries.empty()) {
    throw ParameterError("train-bench: at least one entry required");
  }
  const bool has_ift =
      std::any_of(entries.begin(), entries.end(), [](const BenchEntry& e) {
        return e.config.oracle.method == OracleMethod::IFTExact;
      });
  if (!has_ift) {
    BenchEntry ref;
    ref.name = "ift";
    ref.config = entries.front().config;
    ref.config.oracle.method = OracleMethod::IFTExact;
    entries.insert(entries.begin(), std::move(ref));
  }

  std::map<std::string, std::string> echo;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    echo["entry." + std::to_string(i)] = entries[i].name;
  }
  const std::string hash = config_hash(echo);

  CsvTable table({"seed", "instance", "config_hash", "name", "oracle", "k",
                  "lambda", "steps", "d", "final_loss", "mean_loss_last50",
                  "peak_states", "aborted", "abort_step"});
  CsvTable timings({"name", "mean_forward_ms", "mean_backward_ms",
                    "backward_speedup_vs_ift"});

  std::vector<TrainTrace> traces(entries.size());
  parallel_for(static_cast<int>(entries.size()), workers, [&](int i) {
    traces[static_cast<std::size_t>(i)] =
        sgd_run(entries[static_cast<std::size_t>(i)].config);
  });

  const auto mean_backward = [&](const TrainTrace& t) {
    if (t.steps.empty()) return std::nan("");
    double s = 0.0;
    for (const auto& row : t.steps) s += row.backward_wall_ms;
    return s / static_cast<double>(t.steps.size());
  };

  double ift_backward = std::nan("");
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].config.oracle.method == OracleMethod::IFTExact &&
        std::isnan(ift_backward)) {
      ift_backward = mean_backward(traces[i]);
    }
  }

  int flagged = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const BenchEntry& e = entries[i];
    const TrainTrace& t = traces[i];
    if (t.aborted) ++flagged;

    double fwd_ms = std::nan("");
    double final_loss = std::nan("");
    double tail_mean = std::nan("");
    if (!t.steps.empty()) {
      double s = 0.0;
      for (const auto& row : t.steps) s += row.forward_wall_ms;
      fwd_ms = s / static_cast<double>(t.steps.size());
      final_loss = t.steps.back().loss;
      const std::size_t tail = std::min<std::size_t>(50, t.steps.size());
      double ts = 0.0;
      for (std::size_t j = t.steps.size() - tail; j < t.steps.size(); ++j) {
        ts += t.steps[j].loss;
      }
      tail_mean = ts / static_cast<double>(tail);
    }
    const double bwd_ms = mean_backward(t);
    const double speedup = (std::isnan(ift_backward) || std::isnan(bwd_ms) ||
                            bwd_ms == 0.0)
                               ? std::nan("")
                               : ift_backward / bwd_ms;

    int peak_states = 2;
    switch (e.config.oracle.method) {
      case OracleMethod::UPG: peak_states = e.config.oracle.k + 1; break;
      case OracleMethod::BPTT: peak_states = e.config.solver.max_iters + 1; break;
      case OracleMethod::OneStep: peak_states = 1; break;
      default: peak_states = 2; break;
    }

    table.add_row({cell(e.config.dataset_seed), cell(static_cast<int>(i)), hash,
                   e.name, method_name(e.config.oracle.method),
                   cell(e.config.oracle.k), cell(e.config.oracle.lambda),
                   cell(e.config.steps), cell(static_cast<std::uint64_t>(e.config.d)),
                   cell(final_loss), cell(tail_mean), cell(peak_states),
                   cell(t.aborted), cell(t.abort_step)});
    timings.add_row({e.name, cell(fwd_ms), cell(bwd_ms), cell(speedup)});
  }
  RunResult result{std::move(table), {}, flagged};
  result.aux_tables.emplace_back("timings.csv", std::move(timings));
  return result;
}

RunResult run_fd_check(const FdCheckSpec& spec, int workers) {
  if (spec.n_seeds < 1) throw ParameterError("fd-check: n_seeds must be >= 1");
  std::map<std::string, std::string> echo;
  echo["d"] = std::to_string(spec.d);
  echo["target_L"] = format_double(spec.target_L);
  echo["n_seeds"] = std::to_string(spec.n_seeds);
  echo["seed"] = std::to_string(spec.seed);
  echo["eps_fd"] = format_double(spec.eps_fd);
  echo["oracle"] = method_name(spec.oracle.method);
  const std::string hash = config_hash(echo);

  CsvTable table({"seed", "instance", "config_hash", "d", "target_L", "oracle",
                  "k", "lambda", "eps_fd", "max_rel_error", "failed"});

  std::vector<Row> rows(static_cast<std::size_t>(spec.n_seeds));
  std::atomic<int> flagged{0};

  parallel_for(spec.n_seeds, workers, [&](int i) {
    const std::uint64_t mseed = instance_seed(spec.seed, "fd-check", 0,
                                              static_cast<std::uint64_t>(i));
    const EqModule m = make_synthetic(spec.d, spec.target_L, mseed, spec.kind);
    RngStream data_rng = rng_stream(mseed, "data");
    const Vec u = normal_vec(data_rng, spec.d);
    const Vec y = normal_vec(data_rng, spec.d);
    try {
      const double err = finite_difference_check(m, u, y, spec.oracle,
                                                 spec.eps_fd, spec.forward);
      rows[static_cast<std::size_t>(i)] = {
          cell(spec.seed), cell(i), hash, cell(static_cast<std::uint64_t>(spec.d)),
          cell(spec.target_L), method_name(spec.oracle.method),
          cell(spec.oracle.k), cell(spec.oracle.lambda), cell(spec.eps_fd),
          cell(err), cell(false)};
    } catch (const DivergenceError&) {
      rows[static_cast<std::size_t>(i)] = {
          cell(spec.seed), cell(i), hash, cell(static_cast<std::uint64_t>(spec.d)),
          cell(spec.target_L), method_name(spec.oracle.method),
          cell(spec.oracle.k), cell(spec.oracle.lambda), cell(spec.eps_fd),
          cell(std::nan("")), cell(true)};
      flagged.fetch_add(1);
    }
  });

  for (const Row& r : rows) table.add_row(r);
  return {std::move(table), {}, flagged.load()};
}

}  // namespace eqgrad
