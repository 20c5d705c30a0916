// Copyright (c) 2026 the eqgrad authors
// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "test_support.hpp"

using namespace eqgrad;
using namespace eqgrad::test;

TEST_SUITE_BEGIN("densemath");

TEST_CASE("matvec identity") {
  const Mat i2 = Mat::identity(2);
  const Vec r = matvec(i2, Vec{3.0, 4.0});
  CHECK(r[0] == 3.0);
  CHECK(r[1] == 4.0);
}

TEST_CASE("dot orthogonality") {
  CHECK(dot(Vec{1.0, 0.0}, Vec{0.0, 1.0}) == 0.0);
}

TEST_CASE("gemm diagonal product") {
  const Mat a = Mat::diag(Vec{2.0, 3.0});
  const Mat b = Mat::diag(Vec{4.0, 5.0});
  const Mat c = gemm(a, b);
  CHECK(c(0, 0) == 8.0);
  CHECK(c(1, 1) == 15.0);
  CHECK(c(0, 1) == 0.0);
}

TEST_CASE("dimension mismatch names both shapes") {
  const Mat a(2, 3);
  const Mat b(2, 3);
  CHECK_THROWS_WITH_AS(gemm(a, b), doctest::Contains("2x3"), DimensionError);
  CHECK_THROWS_AS(matvec(a, Vec{1.0}), DimensionError);
  CHECK_THROWS_AS(dot(Vec{1.0}, Vec{1.0, 2.0}), DimensionError);
  Vec y{1.0, 2.0};
  CHECK_THROWS_AS(axpy(1.0, Vec{1.0}, y), DimensionError);
}

TEST_CASE("transpose round trip") {
  RngStream rng(1, "transpose");
  const Mat a = random_mat(rng, 3, 5);
  CHECK(max_abs_diff(transpose(transpose(a)), a) == 0.0);
}

TEST_CASE("power_iteration_sigma diagonal") {
  const auto r = power_iteration_sigma(Mat::diag(Vec{2.0, 1.0}), 500, 1e-12, 3);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-8));
  CHECK(r.converged);
}

TEST_CASE("power_iteration_sigma identity converges immediately") {
  const auto r = power_iteration_sigma(Mat::identity(4), 100, 1e-12, 3);
  CHECK(r.value == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("power_iteration_sigma zero matrix") {
  const auto r = power_iteration_sigma(Mat(3, 3), 100, 1e-12, 3);
  CHECK(r.value == 0.0);
  CHECK(r.iterations == 0);
}

TEST_CASE("power_iteration_sigma matches constructed spectrum") {
  // Oracle: symmetric with known eigenvalues, sigma_max = max |mu|.
  RngStream rng(11, "spectrum");
  const std::vector<double> mu = {0.83, -1.4, 0.2, 0.05, -0.6, 1.1, -0.9, 0.4};
  const Mat s = symmetric_from_spectrum(rng, mu);
  const auto r = power_iteration_sigma(s, 5000, 1e-14, 5);
  CHECK(r.value == doctest::Approx(1.4).epsilon(1e-6));
}

TEST_CASE("sigma estimate never exceeds the Frobenius norm") {
  RngStream rng(2, "sigma-frob");
  for (int trial = 0; trial < 20; ++trial) {
    const Mat a = random_mat(rng, 6, 4);
    const auto r = power_iteration_sigma(a, 200, 1e-10, 17);
    CHECK(r.value <= frobenius_norm(a) * (1.0 + 1e-12));
  }
}

TEST_CASE("power_iteration_rho diagonal") {
  const auto r = power_iteration_rho(Mat::diag(Vec{0.9, 0.5}), 2000, 1e-12, 3);
  CHECK(r.value == doctest::Approx(0.9).epsilon(1e-8));
}

TEST_CASE("power_iteration_rho nilpotent flagged") {
  Mat n(2, 2);
  n(0, 1) = 1.0;
  const auto r = power_iteration_rho(n, 100, 1e-12, 3);
  CHECK_FALSE(r.converged);
  CHECK(r.value == 0.0);
}

TEST_CASE("power_iteration_rho constructed spectrum") {
  RngStream rng(19, "rho-spec");
  const Mat s = symmetric_from_spectrum(rng, {0.75, -0.3});
  const auto r = power_iteration_rho(s, 5000, 1e-13, 7);
  CHECK(r.value == doctest::Approx(0.75).epsilon(1e-6));
}

TEST_CASE("power_iteration_rho requires square") {
  CHECK_THROWS_AS(power_iteration_rho(Mat(2, 3), 10, 1e-10, 1), DimensionError);
}

TEST_CASE("svd_extremes diagonal cases") {
  auto sv = svd_extremes(Mat::diag(Vec{3.0, 1.0}));
  CHECK(sv.sigma_max == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(sv.sigma_min == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sv.kappa == doctest::Approx(3.0).epsilon(1e-12));

  sv = svd_extremes(Mat::identity(5));
  CHECK(sv.sigma_max == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(sv.kappa == doctest::Approx(1.0).epsilon(1e-14));

  sv = svd_extremes(Mat::diag(Vec{2.0, 1.0, 0.5}));
  CHECK(sv.sigma_max == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(sv.sigma_min == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(sv.kappa == doctest::Approx(4.0).epsilon(1e-12));
}

TEST_CASE("svd_extremes orthogonal is (1,1,1)") {
  RngStream rng(23, "ortho");
  const Mat q = random_orthogonal(rng, 7);
  const auto sv = svd_extremes(q);
  CHECK(std::abs(sv.sigma_max - 1.0) <= 1e-10);
  CHECK(std::abs(sv.sigma_min - 1.0) <= 1e-10);
  CHECK(std::abs(sv.kappa - 1.0) <= 1e-10);
}

TEST_CASE("svd_extremes singular reports infinite kappa") {
  const auto sv = svd_extremes(Mat::diag(Vec{1.0, 0.0}));
  CHECK(std::isinf(sv.kappa));
}

TEST_CASE("svd_extremes rectangular") {
  // sigma of [[1,0],[0,2],[0,0]] are {2, 1}.
  Mat a(3, 2);
  a(0, 0) = 1.0;
  a(1, 1) = 2.0;
  const auto sv = svd_extremes(a);
  CHECK(sv.sigma_max == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(sv.sigma_min == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("dense_inverse diagonal") {
  const Mat inv = dense_inverse(Mat::diag(Vec{2.0, 4.0}));
  CHECK(inv(0, 0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(inv(1, 1) == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("dense_inverse scalar resolvent") {
  const Mat m = sub(Mat::identity(2), scale(0.5, Mat::identity(2)));
  const Mat inv = dense_inverse(m);
  CHECK(max_abs_diff(inv, scale(2.0, Mat::identity(2))) <= 1e-14);
}

TEST_CASE("dense_inverse residual on random well-conditioned matrix") {
  RngStream rng(5, "inverse");
  Mat a = random_mat(rng, 8, 8);
  for (std::size_t i = 0; i < 8; ++i) a(i, i) += 4.0;  // diagonally dominant
  const Mat inv = dense_inverse(a);
  const Mat resid = sub(gemm(a, inv), Mat::identity(8));
  CHECK(max_abs(resid) <= 1e-10);
}

TEST_CASE("dense_inverse twice is identity for mild conditioning") {
  RngStream rng(6, "inv-inv");
  for (int trial = 0; trial < 5; ++trial) {
    Mat a = random_mat(rng, 6, 6);
    for (std::size_t i = 0; i < 6; ++i) a(i, i) += 3.0;
    const auto sv = svd_extremes(a);
    REQUIRE(sv.kappa <= 1e4);
    CHECK(max_abs_diff(dense_inverse(dense_inverse(a)), a) <= 1e-8);
  }
}

TEST_CASE("dense_inverse rejects singular input") {
  Mat a(2, 2);
  a(0, 0) = 1.0;
  a(0, 1) = 2.0;
  a(1, 0) = 2.0;
  a(1, 1) = 4.0;
  CHECK_THROWS_AS(dense_inverse(a), SingularMatrixError);
}

TEST_CASE("dense_solve matches dense_inverse") {
  RngStream rng(7, "solve");
  Mat a = random_mat(rng, 5, 5);
  for (std::size_t i = 0; i < 5; ++i) a(i, i) += 3.0;
  const Vec rhs = random_vec(rng, 5);
  const Vec x1 = dense_solve(a, rhs);
  const Vec x2 = matvec(dense_inverse(a), rhs);
  CHECK(max_abs_diff(x1, x2) <= 1e-12);
}

TEST_CASE("cosine_similarity endpoints") {
  RngStream rng(8, "cosine");
  const Vec g = random_vec(rng, 9);
  CHECK(cosine_similarity(g, g) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_similarity(g, scale(-1.0, g)) == doctest::Approx(-1.0).epsilon(1e-15));
  CHECK(cosine_similarity(Vec{1.0, 0.0}, Vec{0.0, 1.0}) == 0.0);
  CHECK_THROWS_AS(cosine_similarity(Vec{0.0, 0.0}, Vec{1.0, 0.0}),
                  ZeroVectorError);
}

TEST_CASE("cosine_similarity is scale invariant") {
  RngStream rng(9, "cos-scale");
  for (int trial = 0; trial < 25; ++trial) {
    const Vec a = random_vec(rng, 6);
    const Vec b = random_vec(rng, 6);
    const double alpha = rng.uniform(0.01, 100.0);
    const double beta = rng.uniform(0.01, 100.0);
    const double base = cosine_similarity(a, b);
    const double scaled = cosine_similarity(scale(alpha, a), scale(beta, b));
    CHECK(std::abs(base - scaled) <= 1e-12);
  }
}

TEST_CASE("symmetric_eigenvalues on constructed spectrum") {
  RngStream rng(10, "eig");
  std::vector<double> mu = {-0.7, -0.1, 0.3, 0.9};
  const Mat s = symmetric_from_spectrum(rng, mu);
  const auto eig = symmetric_eigenvalues(s);
  std::vector<double> want = mu;
  std::sort(want.begin(), want.end());
  for (std::size_t i = 0; i < want.size(); ++i) {
    CHECK(eig[i] == doctest::Approx(want[i]).epsilon(1e-10));
  }
}

TEST_SUITE_END();
