// Copyright (c) 2026 the eqgrad authors
// SPDX-License-Identifier: Apache-2.0
#include "eqgrad/gradoracles.hpp"

#include <cmath>
#include <string>

namespace eqgrad {
namespace {

void check_k_lambda(int k, double lambda, const char* who) {
  if (k < 1) throw ParameterError(std::string(who) + ": k must be >= 1");
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw ParameterError(std::string(who) + ": lambda must lie in (0, 1]");
  }
}

double forward_residual_of(const EqModule& m, const Vec& h_star, const Vec& u) {
  const double hn = norm2(h_star);
  if (hn == 0.0) return 0.0;
  return norm2(sub(h_star, forward(m, h_star, u))) / hn;
}

// Reverse sweep shared by bptt_exact and upg. states = h_0 ... h_T; the loss
// gradient v is taken at h_T. Accumulates lambda-scaled theta/u VJPs at each
// state and propagates a <- lambda*vjp_h(a) + (1-lambda)*a.
PhantomGradient reverse_sweep(const EqModule& m, const std::vector<Vec>& states,
                              const Vec& u, const Vec& v, double lambda) {
  PhantomGradient out;
  Vec a = v;
  bool first = true;
  for (std::size_t t = states.size() - 1; t-- > 0;) {
    const Vec& h_t = states[t];
    Vec gt = vjp_theta(m, h_t, u, a);
    Vec gu = vjp_u(m, h_t, u, a);
    if (lambda != 1.0) {
      scale_in_place(lambda, gt);
      scale_in_place(lambda, gu);
    }
    if (first) {
      out.grad_theta = std::move(gt);
      out.grad_u = std::move(gu);
      first = false;
    } else {
      axpy(1.0, gt, out.grad_theta);
      axpy(1.0, gu, out.grad_u);
    }
    if (t > 0) {
      Vec ja = vjp_h(m, h_t, u, a);
      if (lambda == 1.0) {
        a = std::move(ja);
      } else {
        scale_in_place(lambda, ja);
        axpy(1.0 - lambda, a, ja);
        a = std::move(ja);
      }
      if (!all_finite(a)) {
        throw DivergenceError("reverse sweep: adjoint state left the finite range",
                              states[t].data);
      }
    }
  }
  if (first) {
    out.grad_theta = Vec(m.theta_dim());
    out.grad_u = Vec(m.dim());
  }
  return out;
}

}  // namespace

AdjointSolveResult solve_adjoint(const EqModule& m, const Vec& h_star,
                                 const Vec& u, const Vec& v,
                                 const GradOracleSpec& spec,
                                 bool store_trace) {
  const auto apply = [&](const Vec& g) {
    return add(v, vjp_h(m, h_star, u, g));
  };

  SolverSpec linear;
  linear.tol = spec.adjoint_tol;
  linear.max_iters = spec.adjoint_max_iters;
  linear.store_trajectory = store_trace;
  FixedPointSolution sol;
  if (spec.adjoint_solver == AdjointSolver::BroydenAdjoint) {
    linear.method = SolveMethod::Broyden;
    sol = broyden_fixed_point(apply, v, linear);
  } else {
    linear.method = SolveMethod::Picard;
    sol = picard_fixed_point(apply, v, linear);
  }

  AdjointSolveResult res;
  res.g_hat = std::move(sol.h_star);
  res.iterations = sol.iterations;
  res.converged = sol.converged;
  // (I - J) g_hat - v == g_hat - apply(g_hat) + ... recomputed directly:
  const Vec r = sub(res.g_hat, apply(res.g_hat));
  res.objective = norm2(r);
  const double gn = norm2(res.g_hat);
  res.rel_error = gn > 0.0 ? res.objective / gn : res.objective;
  if (sol.trajectory) res.trace = std::move(*sol.trajectory);
  return res;
}

PhantomGradient ift_exact(const EqModule& m, const Vec& h_star, const Vec& u,
                          const Vec& v, const GradOracleSpec& spec) {
  AdjointSolveResult adj = solve_adjoint(m, h_star, u, v, spec);
  PhantomGradient out;
  out.spec = spec;
  out.spec.method = OracleMethod::IFTExact;
  out.aux.forward_residual = forward_residual_of(m, h_star, u);
  out.aux.adjoint_iterations = adj.iterations;
  out.aux.adjoint_converged = adj.converged;
  out.grad_theta = vjp_theta(m, h_star, u, adj.g_hat);
  out.grad_u = vjp_u(m, h_star, u, adj.g_hat);
  return out;
}

PhantomGradient bptt_exact(const EqModule& m, const FixedPointSolution& sol,
                           const Vec& u, const Vec& v, double lambda_fwd) {
  if (!sol.trajectory || sol.trajectory->empty()) {
    throw UsageError("bptt_exact: solution carries no stored trajectory");
  }
  if (!(lambda_fwd > 0.0 && lambda_fwd <= 1.0)) {
    throw ParameterError("bptt_exact: lambda_fwd must lie in (0, 1]");
  }
  PhantomGradient out = reverse_sweep(m, *sol.trajectory, u, v, lambda_fwd);
  out.spec.method = OracleMethod::BPTT;
  out.spec.lambda = lambda_fwd;
  out.spec.k = static_cast<int>(sol.trajectory->size()) - 1;
  out.aux.forward_residual = sol.rel_residual;
  return out;
}

PhantomGradient upg(const EqModule& m, const Vec& h_star, const Vec& u,
                    const Vec& v, int k, double lambda) {
  check_k_lambda(k, lambda, "upg");
  std::vector<Vec> states;
  states.reserve(static_cast<std::size_t>(k) + 1);
  states.push_back(h_star);
  for (int t = 0; t < k; ++t) {
    const Vec& h = states.back();
    Vec fh = forward(m, h, u);
    Vec next;
    if (lambda == 1.0) {
      next = std::move(fh);
    } else {
      next = scale(lambda, fh);
      axpy(1.0 - lambda, h, next);
    }
    if (!all_finite(next)) {
      throw DivergenceError("upg: unrolled state left the finite range", h.data);
    }
    states.push_back(std::move(next));
  }
  PhantomGradient out = reverse_sweep(m, states, u, v, lambda);
  out.spec.method = OracleMethod::UPG;
  out.spec.k = k;
  out.spec.lambda = lambda;
  out.aux.forward_residual = forward_residual_of(m, h_star, u);
  return out;
}

PhantomGradient npg(const EqModule& m, const Vec& h_star, const Vec& u,
                    const Vec& v, int k, double lambda) {
  check_k_lambda(k, lambda, "npg");
  Vec g_hat = v;
  for (int t = 1; t < k; ++t) {
    Vec jg = vjp_h(m, h_star, u, g_hat);
    if (lambda == 1.0) {
      g_hat = add(v, jg);
    } else {
      scale_in_place(lambda, jg);
      axpy(1.0 - lambda, g_hat, jg);
      g_hat = add(v, jg);
    }
    if (!all_finite(g_hat)) {
      throw DivergenceError("npg: series iterate left the finite range", v.data);
    }
  }
  PhantomGradient out;
  out.spec.method = OracleMethod::NPG;
  out.spec.k = k;
  out.spec.lambda = lambda;
  out.aux.forward_residual = forward_residual_of(m, h_star, u);
  out.grad_theta = vjp_theta(m, h_star, u, g_hat);
  out.grad_u = vjp_u(m, h_star, u, g_hat);
  if (lambda != 1.0) {
    scale_in_place(lambda, out.grad_theta);
    scale_in_place(lambda, out.grad_u);
  }
  return out;
}

PhantomGradient one_step(const EqModule& m, const Vec& h_star, const Vec& u,
                         const Vec& v) {
  PhantomGradient out = npg(m, h_star, u, v, 1, 1.0);
  out.spec.method = OracleMethod::OneStep;
  return out;
}

PhantomGradient evaluate_oracle(const EqModule& m,
                                const FixedPointSolution& sol, const Vec& u,
                                const Vec& v, const GradOracleSpec& spec,
                                double lambda_fwd) {
  switch (spec.method) {
    case OracleMethod::IFTExact:
      return ift_exact(m, sol.h_star, u, v, spec);
    case OracleMethod::BPTT:
      return bptt_exact(m, sol, u, v, lambda_fwd);
    case OracleMethod::UPG:
      return upg(m, sol.h_star, u, v, spec.k, spec.lambda);
    case OracleMethod::NPG:
      return npg(m, sol.h_star, u, v, spec.k, spec.lambda);
    case OracleMethod::OneStep:
      return one_step(m, sol.h_star, u, v);
  }
  throw UsageError("evaluate_oracle: unknown method");
}

}  // namespace eqgrad
