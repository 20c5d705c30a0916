// Copyright (c) 2026 the eqgrad authors
// SPDX-License-Identifier: Apache-2.0
#include "eqgrad/densemath.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "eqgrad/rng.hpp"

namespace eqgrad {
namespace {

std::string shape_str(const Mat& m) {
  return std::to_string(m.rows) + "x" + std::to_string(m.cols);
}

void require_same_len(const Vec& a, const Vec& b, const char* op) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(op) + ": vector lengths " +
                         std::to_string(a.size()) + " and " +
                         std::to_string(b.size()) + " do not match");
  }
}

}  // namespace

Mat Mat::identity(std::size_t n) {
  Mat m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Mat Mat::diag(const Vec& d) {
  Mat m(d.size(), d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
  return m;
}

Vec add(const Vec& a, const Vec& b) {
  require_same_len(a, b, "add");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

Vec sub(const Vec& a, const Vec& b) {
  require_same_len(a, b, "sub");
  Vec r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

Vec scale(double alpha, const Vec& x) {
  Vec r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) r[i] = alpha * x[i];
  return r;
}

void scale_in_place(double alpha, Vec& x) {
  for (double& v : x) v *= alpha;
}

void axpy(double alpha, const Vec& x, Vec& y) {
  require_same_len(x, y, "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

double dot(const Vec& a, const Vec& b) {
  require_same_len(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const Vec& x) { return std::sqrt(dot(x, x)); }

double norm1(const Vec& x) {
  double s = 0.0;
  for (double v : x) s += std::abs(v);
  return s;
}

double norm_inf(const Vec& x) {
  double s = 0.0;
  for (double v : x) s = std::max(s, std::abs(v));
  return s;
}

Vec concat(const Vec& a, const Vec& b) {
  Vec r(a.size() + b.size());
  std::copy(a.begin(), a.end(), r.begin());
  std::copy(b.begin(), b.end(), r.begin() + static_cast<std::ptrdiff_t>(a.size()));
  return r;
}

bool all_finite(const Vec& x) {
  return std::all_of(x.begin(), x.end(),
                     [](double v) { return std::isfinite(v); });
}

Mat gemm(const Mat& a, const Mat& b) {
  if (a.cols != b.rows) {
    throw DimensionError("gemm: inner dimensions of " + shape_str(a) +
                         " and " + shape_str(b) + " do not match");
  }
  Mat c(a.rows, b.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    for (std::size_t k = 0; k < a.cols; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols; ++j) {
        c(i, j) += aik * b(k, j);
      }
    }
  }
  return c;
}

Vec matvec(const Mat& a, const Vec& x) {
  if (a.cols != x.size()) {
    throw DimensionError("matvec: matrix " + shape_str(a) +
                         " against vector of length " +
                         std::to_string(x.size()));
  }
  Vec y(a.rows);
  for (std::size_t i = 0; i < a.rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < a.cols; ++j) s += a(i, j) * x[j];
    y[i] = s;
  }
  return y;
}

Vec matvec_t(const Mat& a, const Vec& x) {
  if (a.rows != x.size()) {
    throw DimensionError("matvec_t: matrix " + shape_str(a) +
                         " transposed against vector of length " +
                         std::to_string(x.size()));
  }
  Vec y(a.cols);
  for (std::size_t i = 0; i < a.rows; ++i) {
    const double xi = x[i];
    if (xi == 0.0) continue;
    for (std::size_t j = 0; j < a.cols; ++j) y[j] += a(i, j) * xi;
  }
  return y;
}

Mat transpose(const Mat& a) {
  Mat t(a.cols, a.rows);
  for (std::size_t i = 0; i < a.rows; ++i)
    for (std::size_t j = 0; j < a.cols; ++j) t(j, i) = a(i, j);
  return t;
}

Mat add(const Mat& a, const Mat& b) {
  if (a.rows != b.rows || a.cols != b.cols) {
    throw DimensionError("mat add: shapes " + shape_str(a) + " and " +
                         shape_str(b) + " do not match");
  }
  Mat c = a;
  for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
  return c;
}

Mat sub(const Mat& a, const Mat& b) {
  if (a.rows != b.rows || a.cols != b.cols) {
    throw DimensionError("mat sub: shapes " + shape_str(a) + " and " +
                         shape_str(b) + " do not match");
  }
  Mat c = a;
  for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] -= b.data[i];
  return c;
}

Mat scale(double alpha, const Mat& a) {
  Mat c = a;
  for (double& v : c.data) v *= alpha;
  return c;
}

Mat outer(const Vec& a, const Vec& b) {
  Mat m(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < b.size(); ++j) m(i, j) = a[i] * b[j];
  return m;
}

double frobenius_norm(const Mat& a) {
  double s = 0.0;
  for (double v : a.data) s += v * v;
  return std::sqrt(s);
}

double max_abs(const Mat& a) {
  double s = 0.0;
  for (double v : a.data) s = std::max(s, std::abs(v));
  return s;
}

PowerIterationResult power_iteration_sigma(const Mat& m, int max_iters,
                                           double tol, std::uint64_t seed) {
  if (max_iters < 1) throw ParameterError("power_iteration_sigma: max_iters must be >= 1");
  if (max_abs(m) == 0.0) return {0.0, 0, true};

  RngStream rng(seed, "power-iteration-sigma");
  Vec v(m.cols);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  double vn = norm2(v);
  if (vn == 0.0) v[0] = 1.0, vn = 1.0;
  scale_in_place(1.0 / vn, v);

  PowerIterationResult result;
  double sigma_prev = 0.0;
  for (int it = 1; it <= max_iters; ++it) {
    Vec w = matvec(m, v);
    const double sigma = norm2(w);  // |m v| with |v| = 1
    result.value = sigma;
    result.iterations = it;
    if (sigma == 0.0) {
      // Start vector happened to lie in the null space; restart axis-aligned.
      v = Vec(m.cols);
      v[it % m.cols] = 1.0;
      continue;
    }
    Vec z = matvec_t(m, w);
    scale_in_place(1.0 / norm2(z), z);
    v = z;
    if (it > 1 && std::abs(sigma - sigma_prev) <= tol * std::abs(sigma)) {
      result.converged = true;
      return result;
    }
    sigma_prev = sigma;
  }
  return result;
}

PowerIterationResult power_iteration_rho(const Mat& m, int max_iters,
                                         double tol, std::uint64_t seed) {
  if (m.rows != m.cols) {
    throw DimensionError("power_iteration_rho: matrix " + shape_str(m) +
                         " is not square");
  }
  if (max_iters < 1) throw ParameterError("power_iteration_rho: max_iters must be >= 1");
  if (max_abs(m) == 0.0) return {0.0, 0, true};

  RngStream rng(seed, "power-iteration-rho");
  Vec v(m.cols);
  for (double& x : v) x = rng.uniform(-1.0, 1.0);
  scale_in_place(1.0 / norm2(v), v);

  PowerIterationResult result;
  double rho_prev = 0.0;
  for (int it = 1; it <= max_iters; ++it) {
    Vec w = matvec(m, v);
    const double wn = norm2(w);
    result.iterations = it;
    if (wn <= std::numeric_limits<double>::min()) {
      // Nilpotent-style collapse; power iteration cannot proceed.
      result.value = 0.0;
      result.converged = false;
      return result;
    }
    const double rho = std::abs(dot(v, w));  // Rayleigh magnitude, |v| = 1
    result.value = rho;
    scale_in_place(1.0 / wn, w);
    v = w;
    if (it > 1 && std::abs(rho - rho_prev) <= tol * std::max(rho, 1e-300)) {
      result.converged = true;
      return result;
    }
    rho_prev = rho;
  }
  return result;
}

std::vector<double> symmetric_eigenvalues(Mat a) {
  if (a.rows != a.cols) {
    throw DimensionError("symmetric_eigenvalues: matrix " + shape_str(a) +
                         " is not square");
  }
  const std::size_t n = a.rows;
  const double scale = std::max(max_abs(a), 1.0);
  const double stop = 1e-15 * scale;
  const int max_sweeps = 64;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
    if (off <= stop) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= stop * 1e-2) continue;
        const double app = a(p, p);
        const double aqq = a(q, q);
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0)
                             ? 1.0 / (tau + std::sqrt(1.0 + tau * tau))
                             : 1.0 / (tau - std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p);
          const double akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k);
          const double aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
      }
    }
  }

  std::vector<double> eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = a(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

SvdExtremes svd_extremes(const Mat& m) {
  if (m.rows == 0 || m.cols == 0) {
    throw ParameterError("svd_extremes: empty matrix");
  }
  // Gram matrix on the smaller side keeps the eigenproblem at min(r,c).
  const bool use_cols = m.cols <= m.rows;
  const std::size_t n = use_cols ? m.cols : m.rows;
  Mat gram(n, n);
  if (use_cols) {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < m.rows; ++k) s += m(k, i) * m(k, j);
        gram(i, j) = gram(j, i) = s;
      }
  } else {
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j) {
        double s = 0.0;
        for (std::size_t k = 0; k < m.cols; ++k) s += m(i, k) * m(j, k);
        gram(i, j) = gram(j, i) = s;
      }
  }
  const std::vector<double> eig = symmetric_eigenvalues(gram);
  SvdExtremes out;
  out.sigma_max = std::sqrt(std::max(eig.back(), 0.0));
  out.sigma_min = std::sqrt(std::max(eig.front(), 0.0));
  out.kappa = out.sigma_min < 1e-300
                  ? std::numeric_limits<double>::infinity()
                  : out.sigma_max / out.sigma_min;
  return out;
}

double spectral_norm(const Mat& m) { return svd_extremes(m).sigma_max; }

namespace {

// LU with partial pivoting; factors in place, returns the row permutation.
// Throws SingularMatrixError when a pivot falls below 1e-12 * max|entry|.
std::vector<std::size_t> lu_factor(Mat& a) {
  const std::size_t n = a.rows;
  const double pivot_floor = 1e-12 * std::max(max_abs(a), 1e-300);
  std::vector<std::size_t> perm(n);
  for (std::size_t i = 0; i < n; ++i) perm[i] = i;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    double best = std::abs(a(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      const double cand = std::abs(a(i, k));
      if (cand > best) best = cand, piv = i;
    }
    if (best < pivot_floor) {
      throw SingularMatrixError(
          "dense LU: pivot " + std::to_string(best) + " at column " +
          std::to_string(k) + " is below the singularity threshold");
    }
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(piv, j));
      std::swap(perm[k], perm[piv]);
    }
    const double inv_pivot = 1.0 / a(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double lik = a(i, k) * inv_pivot;
      a(i, k) = lik;
      if (lik == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) a(i, j) -= lik * a(k, j);
    }
  }
  return perm;
}

Vec lu_solve(const Mat& lu, const std::vector<std::size_t>& perm,
             const Vec& rhs) {
  const std::size_t n = lu.rows;
  Vec x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = rhs[perm[i]];
  for (std::size_t i = 1; i < n; ++i) {
    double s = x[i];
    for (std::size_t j = 0; j < i; ++j) s -= lu(i, j) * x[j];
    x[i] = s;
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = x[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= lu(i, j) * x[j];
    x[i] = s / lu(i, i);
  }
  return x;
}

void require_square_small(const Mat& m, const char* op) {
  if (m.rows != m.cols) {
    throw DimensionError(std::string(op) + ": matrix " + shape_str(m) +
                         " is not square");
  }
  if (m.rows == 0) throw ParameterError(std::string(op) + ": empty matrix");
}

}  // namespace

Mat dense_inverse(const Mat& m) {
  require_square_small(m, "dense_inverse");
  Mat lu = m;
  const auto perm = lu_factor(lu);
  const std::size_t n = m.rows;
  Mat inv(n, n);
  Vec e(n);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    const Vec col = lu_solve(lu, perm, e);
    for (std::size_t i = 0; i < n; ++i) inv(i, j) = col[i];
    e[j] = 0.0;
  }
  return inv;
}

Vec dense_solve(const Mat& m, const Vec& rhs) {
  require_square_small(m, "dense_solve");
  if (rhs.size() != m.rows) {
    throw DimensionError("dense_solve: matrix " + shape_str(m) +
                         " against rhs of length " + std::to_string(rhs.size()));
  }
  Mat lu = m;
  const auto perm = lu_factor(lu);
  return lu_solve(lu, perm, rhs);
}

double cosine_similarity(const Vec& a, const Vec& b) {
  require_same_len(a, b, "cosine_similarity");
  const double na = norm2(a);
  const double nb = norm2(b);
  if (na == 0.0 || nb == 0.0) {
    throw ZeroVectorError("cosine_similarity: undefined angle for a zero vector");
  }
  return dot(a, b) / (na * nb);
}

}  // namespace eqgrad
