// Copyright (c) 2026 the eqgrad authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <sstream>

#include "eqgrad/eqmodule.hpp"
#include "test_support.hpp"

using namespace eqgrad;
using namespace eqgrad::test;

namespace {

EqModule scalar_linear(double w, double b_val, double target_L = 0.9) {
  Mat w_mat(1, 1);
  w_mat(0, 0) = w;
  return make_module(ModuleKind::LinearContraction, w_mat, Vec{b_val}, target_L);
}

// Central difference of <v, F(h + eps e_i, u)> as the independent check for
// the hand-coded adjoints.
Vec fd_vjp_h(const EqModule& m, const Vec& h, const Vec& u, const Vec& v,
             double eps) {
  Vec g(m.dim());
  Vec hp = h;
  for (std::size_t i = 0; i < m.dim(); ++i) {
    hp[i] = h[i] + eps;
    const double plus = dot(v, forward(m, hp, u));
    hp[i] = h[i] - eps;
    const double minus = dot(v, forward(m, hp, u));
    hp[i] = h[i];
    g[i] = (plus - minus) / (2.0 * eps);
  }
  return g;
}

Vec fd_vjp_theta(const EqModule& m, const Vec& h, const Vec& u, const Vec& v,
                 double eps) {
  EqModule probe = m;
  Vec theta = get_theta(m);
  Vec g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double orig = theta[i];
    theta[i] = orig + eps;
    set_theta(probe, theta);
    const double plus = dot(v, forward(probe, h, u));
    theta[i] = orig - eps;
    set_theta(probe, theta);
    const double minus = dot(v, forward(probe, h, u));
    theta[i] = orig;
    g[i] = (plus - minus) / (2.0 * eps);
  }
  return g;
}

}  // namespace

TEST_SUITE_BEGIN("eqmodule");

TEST_CASE("synthetic normalization hits the target Lipschitz level") {
  const EqModule m = make_synthetic(128, 0.9, 42);
  const auto sigma = power_iteration_sigma(m.W, 5000, 1e-13, 99);
  CHECK(sigma.value >= 0.9 * (1.0 - 1e-6));
  CHECK(sigma.value <= 0.9 * (1.0 + 1e-6));
  // W inherits symmetry from its construction.
  CHECK(max_abs_diff(m.W, transpose(m.W)) == 0.0);
}

TEST_CASE("scalar normalization forces magnitude") {
  const EqModule m = make_synthetic(1, 0.5, 7);
  CHECK(std::abs(std::abs(m.W(0, 0)) - 0.5) <= 1e-12);
}

TEST_CASE("same seed gives bitwise-identical modules") {
  const EqModule a = make_synthetic(16, 0.8, 123);
  const EqModule b = make_synthetic(16, 0.8, 123);
  CHECK(a.W.data == b.W.data);
  CHECK(a.b.data == b.b.data);
}

TEST_CASE("target_L outside (0,1) is rejected") {
  CHECK_THROWS_AS(make_synthetic(4, 0.0, 1), ParameterError);
  CHECK_THROWS_AS(make_synthetic(4, 1.0, 1), ParameterError);
  CHECK_THROWS_AS(make_synthetic(4, 1.5, 1), ParameterError);
}

TEST_CASE("forward scalar fixed point") {
  const EqModule m = scalar_linear(0.5, 1.0);
  const Vec out = forward(m, Vec{2.0}, Vec{0.0});
  CHECK(out[0] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("forward tanh of zero is zero") {
  const EqModule m = make_synthetic(6, 0.9, 3, ModuleKind::AffineTanh);
  EqModule zero_bias = m;
  zero_bias.b = Vec(6);
  RngStream rng(1, "h");
  const Vec h = random_vec(rng, 6);
  const Vec out = forward(zero_bias, h, scale(-1.0, h));
  for (double x : out) CHECK(x == 0.0);
}

TEST_CASE("forward with zero weights returns the bias") {
  EqModule m = make_module(ModuleKind::LinearContraction, Mat(4, 4),
                           Vec{1.0, 2.0, 3.0, 4.0}, 0.9);
  RngStream rng(2, "wzero");
  const Vec out = forward(m, random_vec(rng, 4), random_vec(rng, 4));
  CHECK(bitwise_equal(out, m.b));
}

TEST_CASE("vjp_h on diagonal linear module scales elementwise") {
  const EqModule m = make_module(ModuleKind::LinearContraction,
                                 Mat::diag(Vec{0.5, -0.25, 0.125}), Vec(3), 0.9);
  const Vec v{1.0, 2.0, 4.0};
  const Vec g = vjp_h(m, Vec(3), Vec(3), v);
  CHECK(g[0] == 0.5);
  CHECK(g[1] == -0.5);
  CHECK(g[2] == 0.5);
}

TEST_CASE("vjp_h vanishes at saturation") {
  const EqModule m = make_module(ModuleKind::AffineTanh,
                                 Mat::diag(Vec{0.5, 0.5}), Vec{40.0, -40.0}, 0.9);
  const Vec g = vjp_h(m, Vec(2), Vec(2), Vec{1.0, 1.0});
  CHECK(std::abs(g[0]) <= 1e-12);
  CHECK(std::abs(g[1]) <= 1e-12);
}

TEST_CASE("all three adjoints match central differences") {
  RngStream rng(31, "fd");
  for (int trial = 0; trial < 4; ++trial) {
    const std::size_t d = trial % 2 == 0 ? 6 : 12;
    const EqModule m = make_synthetic(d, 0.85, 100 + static_cast<unsigned>(trial));
    const Vec h = random_vec(rng, d);
    const Vec u = random_vec(rng, d);
    const Vec v = random_normal_vec(rng, d);
    const double eps = 1e-5;

    const Vec gh = vjp_h(m, h, u, v);
    const Vec gh_fd = fd_vjp_h(m, h, u, v, eps);
    for (std::size_t i = 0; i < d; ++i) {
      CHECK(std::abs(gh[i] - gh_fd[i]) <=
            1e-5 * std::max({std::abs(gh[i]), std::abs(gh_fd[i]), 1e-6}));
    }

    const Vec gu = vjp_u(m, h, u, v);
    CHECK(bitwise_equal(gu, gh));  // F depends on h + u only

    const Vec gt = vjp_theta(m, h, u, v);
    const Vec gt_fd = fd_vjp_theta(m, h, u, v, eps);
    for (std::size_t i = 0; i < gt.size(); ++i) {
      CHECK(std::abs(gt[i] - gt_fd[i]) <=
            1e-5 * std::max({std::abs(gt[i]), std::abs(gt_fd[i]), 1e-6}));
    }
  }
}

TEST_CASE("vjp_theta scalar product rule") {
  const EqModule m = scalar_linear(0.5, 0.0);
  const Vec g = vjp_theta(m, Vec{1.0}, Vec{2.0}, Vec{2.0});
  CHECK(g[0] == 6.0);  // dW: v * (h + u)
  CHECK(g[1] == 2.0);  // db: v
}

TEST_CASE("vjp_theta with zero upstream gradient is zero") {
  const EqModule m = make_synthetic(5, 0.7, 8);
  const Vec g = vjp_theta(m, Vec(5), Vec(5), Vec(5));
  for (double x : g) CHECK(x == 0.0);
}

TEST_CASE("materialized jacobian of a linear module is W transposed") {
  RngStream rng(17, "jac");
  Mat w = random_mat(rng, 4, 4);
  const EqModule m = make_module(ModuleKind::LinearContraction, w, Vec(4), 0.9);
  const auto [jh, jt] = materialize_jacobians(m, Vec(4), Vec(4));
  CHECK(max_abs_diff(jh, transpose(w)) == 0.0);
  CHECK(jt.rows == m.theta_dim());
  CHECK(jt.cols == 4);
}

TEST_CASE("scalar tanh jacobian at the origin") {
  Mat w(1, 1);
  w(0, 0) = 0.5;
  const EqModule m = make_module(ModuleKind::AffineTanh, w, Vec(1), 0.9);
  const auto [jh, jt] = materialize_jacobians(m, Vec(1), Vec(1));
  CHECK(jh(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(jt(0, 0) == 0.0);  // d/dW with h + u = 0
  CHECK(jt(1, 0) == doctest::Approx(1.0).epsilon(1e-15));  // d/db at origin
}

TEST_CASE("dense jacobian agrees with matrix-free application") {
  RngStream rng(18, "jac-consistency");
  const EqModule m = make_synthetic(10, 0.9, 55);
  const Vec h = random_vec(rng, 10);
  const Vec u = random_vec(rng, 10);
  const auto [jh, jt] = materialize_jacobians(m, h, u);
  for (int trial = 0; trial < 5; ++trial) {
    const Vec v = random_normal_vec(rng, 10);
    CHECK(max_abs_diff(matvec(jh, v), vjp_h(m, h, u, v)) <= 1e-12);
    CHECK(max_abs_diff(matvec(jt, v), vjp_theta(m, h, u, v)) <= 1e-12);
  }
}

TEST_CASE("materialization is guarded at diagnostics scale") {
  const EqModule big = make_module(ModuleKind::LinearContraction, Mat(300, 300),
                                   Vec(300), 0.9);
  CHECK_THROWS_AS(materialize_jacobians(big, Vec(300), Vec(300)),
                  ScaleGuardError);
}

TEST_CASE("contraction certificate over random state pairs") {
  RngStream rng(19, "lipschitz");
  const EqModule m = make_synthetic(12, 0.9, 77);
  const Vec u = random_vec(rng, 12);
  for (int trial = 0; trial < 50; ++trial) {
    const Vec h1 = random_vec(rng, 12, -3.0, 3.0);
    const Vec h2 = random_vec(rng, 12, -3.0, 3.0);
    const double lhs = norm2(sub(forward(m, h1, u), forward(m, h2, u)));
    const double rhs = 0.9 * norm2(sub(h1, h2));
    CHECK(lhs <= rhs * (1.0 + 1e-9) + 1e-300);
  }
}

TEST_CASE("renormalization is idempotent") {
  EqModule m = make_synthetic(16, 0.8, 4);
  const Mat before = m.W;
  renormalize(m);
  CHECK(max_abs_diff(m.W, before) <= 1e-9);
}

TEST_CASE("renormalization projects an inflated weight back") {
  EqModule m = make_synthetic(8, 0.6, 9);
  for (double& w : m.W.data) w *= 3.0;
  renormalize(m);
  const auto sigma = power_iteration_sigma(m.W, 5000, 1e-13, 31);
  CHECK(sigma.value <= 0.6 * (1.0 + 1e-6));
}

TEST_CASE("theta flatten/unflatten round trip") {
  EqModule m = make_synthetic(5, 0.7, 21);
  const Vec theta = get_theta(m);
  EqModule copy = m;
  set_theta(copy, theta);
  CHECK(copy.W.data == m.W.data);
  CHECK(copy.b.data == m.b.data);
  CHECK_THROWS_AS(set_theta(copy, Vec(3)), DimensionError);
}

TEST_CASE("serialization round-trips bitwise") {
  const EqModule m = make_synthetic(9, 0.85, 2026);
  std::stringstream ss;
  save_module(m, ss);
  const EqModule back = load_module(ss);
  CHECK(back.kind == m.kind);
  CHECK(back.W.data == m.W.data);
  CHECK(back.b.data == m.b.data);
  CHECK(back.target_lipschitz == m.target_lipschitz);
  CHECK(back.seed == m.seed);
}

TEST_SUITE_END();
