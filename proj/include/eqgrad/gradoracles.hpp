// Copyright (c) 2026 the eqgrad authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "eqgrad/fpsolvers.hpp"

namespace eqgrad {

enum class OracleMethod { IFTExact, BPTT, UPG, NPG, OneStep };
enum class AdjointSolver { PicardAdjoint, BroydenAdjoint };

struct GradOracleSpec {
  OracleMethod method = OracleMethod::IFTExact;
  int k = 1;            // unroll / series steps, >= 1
  double lambda = 1.0;  // damping factor, in (0, 1]
  AdjointSolver adjoint_solver = AdjointSolver::PicardAdjoint;
  double adjoint_tol = 1e-10;
  int adjoint_max_iters = 500;
};

struct OracleAux {
  double forward_residual = 0.0;
  int adjoint_iterations = 0;
  bool adjoint_converged = true;
  std::optional<double> eps_vs_exact;  // |grad - exact| when co-computed
};

// Gradient estimate of the loss w.r.t. theta and u produced by one backward
// method. grad_theta is flattened over [W; b].
struct PhantomGradient {
  Vec grad_theta;
  Vec grad_u;
  GradOracleSpec spec;
  OracleAux aux;
};

// Result of the backward linear solve g_hat = v + J g_hat where J is the
// adjoint application vjp_h at (h_star, u). objective and rel_error follow
// the solver-trace definitions: |(I - J) g_hat - v| and the same over
// |g_hat|. trace holds g_hat_0 ... g_hat_T when requested.
struct AdjointSolveResult {
  Vec g_hat;
  double objective = 0.0;
  double rel_error = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<Vec> trace;
};

/// Solve the backward linear fixed point with the spec's adjoint solver.
/// Non-finite iterates raise DivergenceError (carrying the trace); running
/// out of iterations returns converged = false.
AdjointSolveResult solve_adjoint(const EqModule& m, const Vec& h_star,
                                 const Vec& u, const Vec& v,
                                 const GradOracleSpec& spec,
                                 bool store_trace = false);

/// Exact gradient via the backward linear solve, then one VJP for each of
/// theta and u.
PhantomGradient ift_exact(const EqModule& m, const Vec& h_star, const Vec& u,
                          const Vec& v, const GradOracleSpec& spec);

/// Exact gradient of the computed iterate: reverse sweep over the stored
/// forward trajectory (which must have been produced with damping factor
/// lambda_fwd).
PhantomGradient bptt_exact(const EqModule& m, const FixedPointSolution& sol,
                           const Vec& u, const Vec& v, double lambda_fwd);

/// Unrolling estimate: k damped steps forward from h_star, then the same
/// reverse sweep as bptt_exact over those k steps. O(k) stored states.
PhantomGradient upg(const EqModule& m, const Vec& h_star, const Vec& u,
                    const Vec& v, int k, double lambda);

/// Truncated-series estimate at h_star: k-1 accumulations of
/// g <- v + lambda * vjp_h(g) + (1 - lambda) * g, then a lambda-scaled VJP.
/// Two work vectors, O(1) memory.
PhantomGradient npg(const EqModule& m, const Vec& h_star, const Vec& u,
                    const Vec& v, int k, double lambda);

/// k = 1, lambda = 1 special case; bitwise equal to npg(1, 1) and upg(1, 1).
PhantomGradient one_step(const EqModule& m, const Vec& h_star, const Vec& u,
                         const Vec& v);

/// Dispatch on spec.method. BPTT requires sol.trajectory and uses
/// lambda_fwd; the other methods read sol.h_star only.
PhantomGradient evaluate_oracle(const EqModule& m,
                                const FixedPointSolution& sol, const Vec& u,
                                const Vec& v, const GradOracleSpec& spec,
                                double lambda_fwd = 1.0);

}  // namespace eqgrad
