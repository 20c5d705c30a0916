// Copyright (c) 2026 the eqgrad authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "eqgrad/eqmodule.hpp"

namespace eqgrad {

enum class SolveMethod { Picard, DampedPicard, Broyden };

struct SolverSpec {
  SolveMethod method = SolveMethod::Picard;
  double tol = 1e-8;
  int max_iters = 100;
  double lambda_fwd = 1.0;  // DampedPicard mixing factor, in (0, 1]
  int broyden_memory = 30;
  bool store_trajectory = false;
};

struct FixedPointSolution {
  Vec h_star;
  double rel_residual = 0.0;
  int iterations = 0;
  bool converged = false;
  std::optional<std::vector<Vec>> trajectory;  // h_0 ... h_T, back() == h_star
};

/// |h - F(h, z)| / |h|; throws ZeroVectorError for h = 0.
double relative_residual(const EqModule& m, const Vec& h, const Vec& u);

FixedPointSolution picard_solve(const EqModule& m, const Vec& u,
                                const SolverSpec& spec, const Vec& h0);
FixedPointSolution broyden_solve(const EqModule& m, const Vec& u,
                                 const SolverSpec& spec, const Vec& h0);

/// Dispatch on spec.method; h0 defaults to the zero vector.
FixedPointSolution solve(const EqModule& m, const Vec& u,
                         const SolverSpec& spec);
FixedPointSolution solve(const EqModule& m, const Vec& u,
                         const SolverSpec& spec, const Vec& h0);

// Generic cores over an arbitrary map f; the adjoint linear solves reuse
// them with f(g) = v + vjp_h(g).
using VecMap = std::function<Vec(const Vec&)>;
FixedPointSolution picard_fixed_point(const VecMap& f, Vec h0,
                                      const SolverSpec& spec);
/// Limited-memory "good Broyden" on the root function f(h) - h; inverse
/// Jacobian starts at -I, steps are clipped to |dh| <= 10 |g|, and a
/// near-zero update denominator resets the memory to -I.
FixedPointSolution broyden_fixed_point(const VecMap& f, Vec h0,
                                       const SolverSpec& spec);

}  // namespace eqgrad
