// Copyright (c) 2026 the eqgrad authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <vector>

#include "eqgrad/errors.hpp"

namespace eqgrad {

// Dense column vector of 64-bit floats. All numerics in this project are
// double precision; instances stay small (a few hundred entries).
struct Vec {
  std::vector<double> data;

  Vec() = default;
  explicit Vec(std::size_t n, double fill = 0.0) : data(n, fill) {}
  Vec(std::initializer_list<double> xs) : data(xs) {}
  explicit Vec(std::vector<double> xs) : data(std::move(xs)) {}

  std::size_t size() const { return data.size(); }
  double& operator[](std::size_t i) { return data[i]; }
  double operator[](std::size_t i) const { return data[i]; }

  auto begin() { return data.begin(); }
  auto end() { return data.end(); }
  auto begin() const { return data.begin(); }
  auto end() const { return data.end(); }
};

// Dense row-major matrix.
struct Mat {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Mat() = default;
  Mat(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  static Mat identity(std::size_t n);
  static Mat diag(const Vec& d);

  double& operator()(std::size_t i, std::size_t j) { return data[i * cols + j]; }
  double operator()(std::size_t i, std::size_t j) const {
    return data[i * cols + j];
  }
};

// Elementwise / BLAS-1 style kernels.
Vec add(const Vec& a, const Vec& b);
Vec sub(const Vec& a, const Vec& b);
Vec scale(double alpha, const Vec& x);
void scale_in_place(double alpha, Vec& x);
/// y += alpha * x
void axpy(double alpha, const Vec& x, Vec& y);
double dot(const Vec& a, const Vec& b);
double norm2(const Vec& x);
double norm1(const Vec& x);
double norm_inf(const Vec& x);
Vec concat(const Vec& a, const Vec& b);
bool all_finite(const Vec& x);

// BLAS-2/3 style kernels.
Mat gemm(const Mat& a, const Mat& b);
Vec matvec(const Mat& a, const Vec& x);
/// aT * x without forming the transpose.
Vec matvec_t(const Mat& a, const Vec& x);
Mat transpose(const Mat& a);
Mat add(const Mat& a, const Mat& b);
Mat sub(const Mat& a, const Mat& b);
Mat scale(double alpha, const Mat& a);
/// a b^T for column vectors a, b.
Mat outer(const Vec& a, const Vec& b);
double frobenius_norm(const Mat& a);
double max_abs(const Mat& a);

struct PowerIterationResult {
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

/// Largest singular value of m, by power iteration on m^T m from a seeded
/// uniform start vector. A zero matrix yields value 0 with 0 iterations.
PowerIterationResult power_iteration_sigma(const Mat& m, int max_iters,
                                           double tol, std::uint64_t seed);

/// Spectral radius |lambda_max| of a square m, by power iteration on m
/// itself. Degenerate decay (iterate collapses to zero) is reported as
/// converged = false with the best available estimate.
PowerIterationResult power_iteration_rho(const Mat& m, int max_iters,
                                         double tol, std::uint64_t seed);

struct SvdExtremes {
  double sigma_max = 0.0;
  double sigma_min = 0.0;
  double kappa = 0.0;  // sigma_max / sigma_min, +inf when sigma_min ~ 0
};

/// Extreme singular values via a cyclic Jacobi eigendecomposition of the
/// smaller Gram matrix (m^T m or m m^T). Intended for dimensions <= ~256.
SvdExtremes svd_extremes(const Mat& m);

/// Operator 2-norm, sigma_max via svd_extremes.
double spectral_norm(const Mat& m);

/// All eigenvalues of a symmetric matrix, ascending (cyclic Jacobi).
std::vector<double> symmetric_eigenvalues(Mat a);

/// Inverse by LU with partial pivoting. Square inputs of dimension <= ~256.
Mat dense_inverse(const Mat& m);

/// Solve m x = rhs by LU with partial pivoting.
Vec dense_solve(const Mat& m, const Vec& rhs);

/// dot(a,b) / (|a| |b|); throws ZeroVectorError when either norm is zero.
double cosine_similarity(const Vec& a, const Vec& b);

}  // namespace eqgrad
