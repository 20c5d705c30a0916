// Copyright (c) 2026 the eqgrad authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "eqgrad/fpsolvers.hpp"
#include "test_support.hpp"

using namespace eqgrad;
using namespace eqgrad::test;

namespace {

EqModule scalar_linear(double w, double b_val) {
  Mat w_mat(1, 1);
  w_mat(0, 0) = w;
  return make_module(ModuleKind::LinearContraction, w_mat, Vec{b_val}, 0.9);
}

// Closed-form root of the linear family: h* = (I - W)^-1 (W u + b).
Vec linear_root(const EqModule& m, const Vec& u) {
  const Mat a = sub(Mat::identity(m.dim()), m.W);
  Vec rhs = matvec(m.W, u);
  axpy(1.0, m.b, rhs);
  return dense_solve(a, rhs);
}

}  // namespace

TEST_SUITE_BEGIN("fpsolvers");

TEST_CASE("picard reaches the scalar geometric fixed point") {
  const EqModule m = scalar_linear(0.5, 1.0);
  SolverSpec spec;
  spec.tol = 1e-10;
  spec.max_iters = 200;
  const auto sol = picard_solve(m, Vec{0.0}, spec, Vec{0.0});
  CHECK(sol.converged);
  CHECK(sol.h_star[0] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("synthetic instance meets the budgeted residual") {
  const EqModule m = make_synthetic(128, 0.9, 12);
  RngStream rng(3, "u");
  const Vec u = random_normal_vec(rng, 128);
  SolverSpec spec;
  spec.tol = 1e-5;
  spec.max_iters = 100;
  const auto sol = picard_solve(m, u, spec, Vec(128));
  CHECK(sol.converged);
  CHECK(sol.rel_residual < 1e-5);
}

TEST_CASE("damping preserves the root but slows the march") {
  const EqModule m = scalar_linear(0.5, 1.0);
  SolverSpec plain;
  plain.tol = 1e-10;
  plain.max_iters = 500;
  const auto fast = picard_solve(m, Vec{0.0}, plain, Vec{0.0});

  SolverSpec damped = plain;
  damped.method = SolveMethod::DampedPicard;
  damped.lambda_fwd = 0.5;
  const auto slow = picard_solve(m, Vec{0.0}, damped, Vec{0.0});

  CHECK(slow.converged);
  CHECK(std::abs(slow.h_star[0] - 2.0) <= 1e-9);
  CHECK(slow.iterations > fast.iterations);
}

TEST_CASE("root invariance under the damping grid") {
  const EqModule m = make_synthetic(10, 0.85, 44);
  RngStream rng(5, "u");
  const Vec u = random_normal_vec(rng, 10);
  SolverSpec spec;
  spec.tol = 1e-11;
  spec.max_iters = 4000;
  const auto ref = picard_solve(m, u, spec, Vec(10));
  REQUIRE(ref.converged);
  for (const double lam : {0.25, 0.5, 0.75, 1.0}) {
    SolverSpec damped = spec;
    damped.method = SolveMethod::DampedPicard;
    damped.lambda_fwd = lam;
    const auto sol = picard_solve(m, u, damped, Vec(10));
    CHECK(sol.converged);
    CHECK(norm2(sub(sol.h_star, ref.h_star)) <= 10.0 * spec.tol * norm2(ref.h_star));
  }
}

TEST_CASE("residual contracts per step on a symmetric linear instance") {
  const EqModule m = make_synthetic(12, 0.9, 91, ModuleKind::LinearContraction);
  // Bound against the measured contraction factor; normalization leaves
  // sigma within a 1e-6 relative band of the 0.9 target.
  const double lip = power_iteration_sigma(m.W, 5000, 1e-14, 7).value;
  CHECK(lip <= 0.9 * (1.0 + 1e-6));
  RngStream rng(6, "u");
  const Vec u = random_normal_vec(rng, 12);
  SolverSpec spec;
  // Stop above the rounding floor; deeper in, per-step noise of ~1e-15|h|
  // dwarfs the shrinking residual and the ratio is no longer meaningful.
  spec.tol = 1e-6;
  spec.max_iters = 500;
  spec.store_trajectory = true;
  const auto sol = picard_solve(m, u, spec, Vec(12));
  REQUIRE(sol.converged);
  const auto& traj = *sol.trajectory;
  for (std::size_t t = 1; t + 1 < traj.size(); ++t) {
    const double r0 = norm2(sub(traj[t], forward(m, traj[t], u)));
    const double r1 = norm2(sub(traj[t + 1], forward(m, traj[t + 1], u)));
    CHECK(r1 <= r0 * (lip + 1e-9));
  }
}

TEST_CASE("trajectory tail is the returned root, bitwise") {
  const EqModule m = make_synthetic(8, 0.8, 15);
  RngStream rng(7, "u");
  const Vec u = random_normal_vec(rng, 8);
  SolverSpec spec;
  spec.tol = 1e-9;
  spec.max_iters = 500;
  spec.store_trajectory = true;
  const auto sol = picard_solve(m, u, spec, Vec(8));
  REQUIRE(sol.trajectory.has_value());
  CHECK(bitwise_equal(sol.trajectory->back(), sol.h_star));
  CHECK(static_cast<int>(sol.trajectory->size()) == sol.iterations + 1);
}

TEST_CASE("picard reports divergence with the last finite iterate") {
  const EqModule m = make_module(ModuleKind::LinearContraction,
                                 scale(2.0, Mat::identity(2)), Vec{1.0, 1.0}, 0.9);
  SolverSpec spec;
  spec.tol = 1e-12;
  spec.max_iters = 5000;
  CHECK_THROWS_AS(picard_solve(m, Vec{1.0, 1.0}, spec, Vec(2)), DivergenceError);
  try {
    picard_solve(m, Vec{1.0, 1.0}, spec, Vec(2));
  } catch (const DivergenceError& e) {
    CHECK(e.last_finite_iterate.size() == 2);
    for (double x : e.last_finite_iterate) CHECK(std::isfinite(x));
  }
}

TEST_CASE("broyden solves the scalar linear root in a few steps") {
  const EqModule m = scalar_linear(0.5, 1.0);
  SolverSpec spec;
  spec.method = SolveMethod::Broyden;
  spec.tol = 1e-10;
  spec.max_iters = 50;
  const auto sol = broyden_solve(m, Vec{0.0}, spec, Vec{0.0});
  CHECK(sol.converged);
  CHECK(sol.iterations <= 3);
  CHECK(sol.h_star[0] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("broyden beats picard on the synthetic instance") {
  const EqModule m = make_synthetic(128, 0.9, 5);
  RngStream rng(8, "u");
  const Vec u = random_normal_vec(rng, 128);

  SolverSpec picard;
  picard.tol = 1e-5;
  picard.max_iters = 400;
  const auto ps = picard_solve(m, u, picard, Vec(128));
  REQUIRE(ps.converged);

  SolverSpec broyden = picard;
  broyden.method = SolveMethod::Broyden;
  const auto bs = broyden_solve(m, u, broyden, Vec(128));
  CHECK(bs.converged);
  CHECK(bs.rel_residual < 1e-5);
  CHECK(bs.iterations < ps.iterations);
}

TEST_CASE("broyden with an exact start only checks the residual") {
  const EqModule m = scalar_linear(0.5, 1.0);
  SolverSpec spec;
  spec.method = SolveMethod::Broyden;
  spec.tol = 1e-8;
  spec.max_iters = 50;
  const auto sol = broyden_solve(m, Vec{0.0}, spec, Vec{2.0});
  CHECK(sol.converged);
  CHECK(sol.iterations == 0);
}

TEST_CASE("solve dispatches and defaults h0 to zero") {
  const EqModule m = scalar_linear(0.5, 1.0);
  SolverSpec spec;
  spec.tol = 1e-10;
  spec.max_iters = 100;
  const auto sol = solve(m, Vec{0.0}, spec);
  CHECK(sol.h_star[0] == doctest::Approx(2.0).epsilon(1e-9));
  CHECK_THROWS_AS(broyden_solve(m, Vec{0.0}, spec, Vec{0.0}), UsageError);
}

TEST_CASE("relative residual definition and edge cases") {
  const EqModule m = scalar_linear(0.5, 1.0);
  CHECK(relative_residual(m, Vec{2.0}, Vec{0.0}) <= 1e-15);
  CHECK_THROWS_AS(relative_residual(m, Vec{0.0}, Vec{0.0}), ZeroVectorError);

  // Analytic root from the dense oracle has (near-)zero residual.
  const EqModule big = make_synthetic(16, 0.85, 33, ModuleKind::LinearContraction);
  RngStream rng(9, "u");
  const Vec u = random_normal_vec(rng, 16);
  const Vec root = linear_root(big, u);
  CHECK(relative_residual(big, root, u) <= 1e-10);

  // Arbitrary point: definition check against manual recomputation.
  const Vec h = random_vec(rng, 16);
  const double manual = norm2(sub(h, forward(big, h, u))) / norm2(h);
  CHECK(relative_residual(big, h, u) == manual);
}

TEST_CASE("spec validation") {
  const EqModule m = scalar_linear(0.5, 1.0);
  SolverSpec spec;
  spec.tol = 0.0;
  CHECK_THROWS_AS(picard_solve(m, Vec{0.0}, spec, Vec{0.0}), ParameterError);
  spec.tol = 1e-8;
  spec.max_iters = 0;
  CHECK_THROWS_AS(picard_solve(m, Vec{0.0}, spec, Vec{0.0}), ParameterError);
}

TEST_SUITE_END();
