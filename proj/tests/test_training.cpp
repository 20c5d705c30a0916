// Copyright (c) 2026 the eqgrad authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "eqgrad/training.hpp"
#include "test_support.hpp"

using namespace eqgrad;
using namespace eqgrad::test;

TEST_SUITE_BEGIN("training");

TEST_CASE("datasets are deterministic per seed") {
  const auto a = make_dataset(8, 16, 5);
  const auto b = make_dataset(8, 16, 5);
  const auto c = make_dataset(8, 16, 6);
  REQUIRE(a.size() == 16);
  CHECK(a[3].first.data == b[3].first.data);
  CHECK(a[3].second.data == b[3].second.data);
  CHECK(a[0].first.data != c[0].first.data);
  CHECK(a[0].first.size() == 8);
}

TEST_CASE("dataset parameter validation") {
  CHECK_THROWS_AS(make_dataset(8, 0, 1), ParameterError);
  CHECK_THROWS_AS(make_dataset(0, 4, 1), ParameterError);
}

TEST_CASE("zero learning rate leaves the parameters untouched") {
  TrainConfig cfg;
  cfg.steps = 3;
  cfg.eta0 = 0.0;
  cfg.weight_decay = 0.0;
  cfg.d = 6;
  cfg.n_pairs = 8;
  cfg.batch_size = 2;
  cfg.target_L = 0.7;
  cfg.dataset_seed = 11;
  cfg.solver.tol = 1e-9;
  cfg.solver.max_iters = 1000;
  const TrainTrace trace = sgd_run(cfg);
  REQUIRE(trace.steps.size() == 3);
  CHECK_FALSE(trace.aborted);
  CHECK(trace.steps[0].loss > 0.0);

  const EqModule fresh = make_synthetic(6, 0.7, 11);
  CHECK(trace.final_module.W.data == fresh.W.data);
  CHECK(trace.final_module.b.data == fresh.b.data);
}

TEST_CASE("loss decreases on the scalar regression surface") {
  TrainConfig cfg;
  cfg.kind = ModuleKind::LinearContraction;
  cfg.d = 1;
  cfg.n_pairs = 16;
  cfg.batch_size = 16;
  cfg.steps = 60;
  cfg.eta0 = 0.05;
  cfg.target_L = 0.6;
  cfg.dataset_seed = 3;
  cfg.solver.tol = 1e-11;
  cfg.solver.max_iters = 2000;
  cfg.oracle.adjoint_tol = 1e-11;
  cfg.oracle.adjoint_max_iters = 2000;
  const TrainTrace trace = sgd_run(cfg);
  REQUIRE_FALSE(trace.aborted);
  CHECK(trace.steps.back().loss < trace.steps.front().loss);
}

TEST_CASE("inv-sqrt schedule keeps eta_n * sqrt(n) constant") {
  TrainConfig cfg;
  cfg.eta0 = 0.3;
  for (int n = 1; n <= 1000; n *= 3) {
    const double eta = learning_rate(cfg, n);
    CHECK(std::abs(eta * std::sqrt(static_cast<double>(n)) - 0.3) <= 1e-12);
  }
  cfg.schedule = LrSchedule::Constant;
  CHECK(learning_rate(cfg, 100) == 0.3);
}

TEST_CASE("spectral constraint holds after every update") {
  TrainConfig cfg;
  cfg.d = 10;
  cfg.n_pairs = 12;
  cfg.batch_size = 4;
  cfg.steps = 20;
  cfg.eta0 = 0.2;
  cfg.target_L = 0.8;
  cfg.dataset_seed = 8;
  cfg.solver.tol = 1e-9;
  cfg.solver.max_iters = 2000;
  cfg.oracle.method = OracleMethod::NPG;
  cfg.oracle.k = 5;
  cfg.oracle.lambda = 0.5;
  const TrainTrace trace = sgd_run(cfg);
  REQUIRE_FALSE(trace.aborted);
  const auto sigma = power_iteration_sigma(trace.final_module.W, 5000, 1e-13, 17);
  CHECK(sigma.value <= 0.8 * (1.0 + 1e-6));
}

TEST_CASE("weight decay shrinks the parameters") {
  TrainConfig cfg;
  cfg.d = 6;
  cfg.n_pairs = 8;
  cfg.batch_size = 8;
  cfg.steps = 10;
  cfg.eta0 = 0.0;  // isolate the decay term: theta <- theta - eta wd theta
  cfg.weight_decay = 0.5;
  cfg.dataset_seed = 21;
  cfg.solver.tol = 1e-9;
  cfg.solver.max_iters = 1000;
  // eta = 0 disables the update entirely, so nothing may move.
  const TrainTrace trace = sgd_run(cfg);
  const EqModule fresh = make_synthetic(6, cfg.target_L, 21);
  CHECK(trace.final_module.W.data == fresh.W.data);
}

TEST_CASE("bptt oracle trains through the stored trajectory") {
  TrainConfig cfg;
  cfg.d = 6;
  cfg.n_pairs = 8;
  cfg.batch_size = 4;
  cfg.steps = 5;
  cfg.eta0 = 0.05;
  cfg.dataset_seed = 13;
  cfg.target_L = 0.7;
  cfg.solver.tol = 1e-10;
  cfg.solver.max_iters = 500;
  cfg.oracle.method = OracleMethod::BPTT;
  const TrainTrace trace = sgd_run(cfg);
  CHECK_FALSE(trace.aborted);
  CHECK(trace.steps.size() == 5);
}

TEST_CASE("fd audit accepts the exact oracle") {
  const EqModule m = make_synthetic(8, 0.5, 5);
  RngStream rng(4, "fd");
  const Vec u = random_normal_vec(rng, 8);
  const Vec y = random_normal_vec(rng, 8);
  GradOracleSpec oracle;
  oracle.adjoint_tol = 1e-13;
  oracle.adjoint_max_iters = 10000;
  SolverSpec fwd;
  fwd.tol = 1e-13;
  fwd.max_iters = 20000;
  const double err = finite_difference_check(m, u, y, oracle, 1e-5, fwd);
  CHECK(err <= 1e-5);
}

TEST_CASE("fd audit quantifies the scalar one-step bias") {
  Mat w(1, 1);
  w(0, 0) = 0.5;
  const EqModule m =
      make_module(ModuleKind::LinearContraction, w, Vec{0.3}, 0.9);
  RngStream rng(5, "fd1");
  const Vec u{0.7};
  const Vec y{-0.4};
  GradOracleSpec oracle;
  oracle.method = OracleMethod::OneStep;
  SolverSpec fwd;
  fwd.tol = 1e-13;
  fwd.max_iters = 20000;
  const double err = finite_difference_check(m, u, y, oracle, 1e-5, fwd);
  // One-step keeps a (1 - a) = 0.5 fraction of the true sensitivity.
  CHECK(err == doctest::Approx(0.5).epsilon(1e-3));
}

TEST_CASE("fd audit accepts a long unroll") {
  const EqModule m = make_synthetic(6, 0.5, 6);
  RngStream rng(6, "fd2");
  const Vec u = random_normal_vec(rng, 6);
  const Vec y = random_normal_vec(rng, 6);
  GradOracleSpec oracle;
  oracle.method = OracleMethod::UPG;
  oracle.k = 100;
  oracle.lambda = 1.0;
  SolverSpec fwd;
  fwd.tol = 1e-13;
  fwd.max_iters = 20000;
  const double err = finite_difference_check(m, u, y, oracle, 1e-5, fwd);
  CHECK(err <= 1e-4);
}

TEST_CASE("fd audit guards its preconditions") {
  const EqModule m = make_synthetic(6, 0.5, 7);
  GradOracleSpec oracle;
  SolverSpec fwd;
  fwd.tol = 1e-6;  // too loose
  fwd.max_iters = 100;
  CHECK_THROWS_AS(
      finite_difference_check(m, Vec(6), Vec(6), oracle, 1e-5, fwd),
      ParameterError);
  const EqModule big = make_synthetic(40, 0.5, 8);
  fwd.tol = 1e-13;
  CHECK_THROWS_AS(
      finite_difference_check(big, Vec(40), Vec(40), oracle, 1e-5, fwd),
      ScaleGuardError);
}

TEST_SUITE_END();
