// Copyright (c) 2026 the eqgrad authors
// SPDX-License-Identifier: Apache-2.0
#include "eqgrad/fpsolvers.hpp"

#include <cmath>
#include <deque>
#include <limits>

namespace eqgrad {
namespace {

// Residual with a guarded denominator for intermediate iterates; the public
// relative_residual rejects zero h instead.
double guarded_rel_residual(const Vec& h, const Vec& fh) {
  const double num = norm2(sub(h, fh));
  const double den = norm2(h);
  if (den == 0.0) {
    return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  }
  return num / den;
}

[[noreturn]] void throw_divergence(const char* who, const Vec& last,
                                   const std::optional<std::vector<Vec>>& traj) {
  std::vector<std::vector<double>> trace;
  if (traj) {
    trace.reserve(traj->size());
    for (const Vec& v : *traj) trace.push_back(v.data);
  }
  throw DivergenceError(std::string(who) + ": iterate left the finite range",
                        last.data, std::move(trace));
}

}  // namespace

double relative_residual(const EqModule& m, const Vec& h, const Vec& u) {
  if (norm2(h) == 0.0) {
    throw ZeroVectorError("relative_residual: undefined for h = 0");
  }
  return guarded_rel_residual(h, forward(m, h, u));
}

FixedPointSolution picard_fixed_point(const VecMap& f, Vec h0,
                                      const SolverSpec& spec) {
  if (spec.tol <= 0.0) throw ParameterError("picard: tol must be > 0");
  if (spec.max_iters < 1) throw ParameterError("picard: max_iters must be >= 1");
  const double lam =
      spec.method == SolveMethod::DampedPicard ? spec.lambda_fwd : 1.0;
  if (!(lam > 0.0 && lam <= 1.0)) {
    throw ParameterError("picard: lambda_fwd must lie in (0, 1]");
  }

  FixedPointSolution sol;
  sol.h_star = std::move(h0);
  if (spec.store_trajectory) sol.trajectory = std::vector<Vec>{sol.h_star};

  Vec last_finite = sol.h_star;
  for (int t = 0; t <= spec.max_iters; ++t) {
    Vec fh = f(sol.h_star);
    if (!all_finite(fh)) throw_divergence("picard", last_finite, sol.trajectory);
    sol.rel_residual = guarded_rel_residual(sol.h_star, fh);
    sol.iterations = t;
    if (sol.rel_residual <= spec.tol) {
      sol.converged = true;
      return sol;
    }
    if (t == spec.max_iters) break;
    if (lam == 1.0) {
      sol.h_star = std::move(fh);
    } else {
      Vec next = scale(lam, fh);
      axpy(1.0 - lam, sol.h_star, next);
      sol.h_star = std::move(next);
    }
    last_finite = sol.h_star;
    if (sol.trajectory) sol.trajectory->push_back(sol.h_star);
  }
  return sol;
}

FixedPointSolution broyden_fixed_point(const VecMap& f, Vec h0,
                                       const SolverSpec& spec) {
  if (spec.tol <= 0.0) throw ParameterError("broyden: tol must be > 0");
  if (spec.max_iters < 1) throw ParameterError("broyden: max_iters must be >= 1");
  if (spec.broyden_memory < 1) {
    throw ParameterError("broyden: broyden_memory must be >= 1");
  }

  FixedPointSolution sol;
  sol.h_star = std::move(h0);
  if (spec.store_trajectory) sol.trajectory = std::vector<Vec>{sol.h_star};

  // Inverse-Jacobian estimate B = -I + sum_i u_i v_i^T, applied matrix-free.
  std::deque<std::pair<Vec, Vec>> memory;
  const auto apply_b = [&memory](const Vec& x) {
    Vec y = scale(-1.0, x);
    for (const auto& [uu, vv] : memory) axpy(dot(vv, x), uu, y);
    return y;
  };

  Vec g = sub(f(sol.h_star), sol.h_star);
  if (!all_finite(g)) throw_divergence("broyden", sol.h_star, sol.trajectory);
  Vec last_finite = sol.h_star;

  for (int t = 0; t <= spec.max_iters; ++t) {
    sol.rel_residual = guarded_rel_residual(sol.h_star, add(sol.h_star, g));
    sol.iterations = t;
    if (sol.rel_residual <= spec.tol) {
      sol.converged = true;
      return sol;
    }
    if (t == spec.max_iters) break;

    Vec dh = scale(-1.0, apply_b(g));
    const double step_cap = 10.0 * norm2(g);
    const double dh_norm = norm2(dh);
    if (dh_norm > step_cap && dh_norm > 0.0) {
      scale_in_place(step_cap / dh_norm, dh);
    }

    Vec h_next = add(sol.h_star, dh);
    Vec g_next = sub(f(h_next), h_next);
    if (!all_finite(g_next) || !all_finite(h_next)) {
      throw_divergence("broyden", last_finite, sol.trajectory);
    }

    const Vec dg = sub(g_next, g);
    const Vec b_dg = apply_b(dg);
    const double denom = dot(dh, b_dg);
    if (std::abs(denom) < 1e-14) {
      memory.clear();
    } else {
      Vec u_new = sub(dh, b_dg);
      scale_in_place(1.0 / denom, u_new);
      // v_new^T = dh^T B; B is applied from the left of column vectors, so
      // build it as B^T dh = -dh + sum_i v_i (u_i . dh).
      Vec v_new = scale(-1.0, dh);
      for (const auto& [uu, vv] : memory) axpy(dot(uu, dh), vv, v_new);
      memory.emplace_back(std::move(u_new), std::move(v_new));
      if (static_cast<int>(memory.size()) > spec.broyden_memory) {
        memory.pop_front();
      }
    }

    sol.h_star = std::move(h_next);
    g = std::move(g_next);
    last_finite = sol.h_star;
    if (sol.trajectory) sol.trajectory->push_back(sol.h_star);
  }
  return sol;
}

FixedPointSolution picard_solve(const EqModule& m, const Vec& u,
                                const SolverSpec& spec, const Vec& h0) {
  if (spec.method != SolveMethod::Picard &&
      spec.method != SolveMethod::DampedPicard) {
    throw UsageError("picard_solve: spec.method is not Picard/DampedPicard");
  }
  return picard_fixed_point([&](const Vec& h) { return forward(m, h, u); },
                            h0, spec);
}

FixedPointSolution broyden_solve(const EqModule& m, const Vec& u,
                                 const SolverSpec& spec, const Vec& h0) {
  if (spec.method != SolveMethod::Broyden) {
    throw UsageError("broyden_solve: spec.method is not Broyden");
  }
  return broyden_fixed_point([&](const Vec& h) { return forward(m, h, u); },
                             h0, spec);
}

FixedPointSolution solve(const EqModule& m, const Vec& u,
                         const SolverSpec& spec, const Vec& h0) {
  return spec.method == SolveMethod::Broyden ? broyden_solve(m, u, spec, h0)
                                             : picard_solve(m, u, spec, h0);
}

FixedPointSolution solve(const EqModule& m, const Vec& u,
                         const SolverSpec& spec) {
  return solve(m, u, spec, Vec(m.dim()));
}

}  // namespace eqgrad
