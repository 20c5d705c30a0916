// Copyright (c) 2026 the eqgrad authors
// SPDX-License-Identifier: Apache-2.0
#include "eqgrad/diagnostics.hpp"

#include <cmath>

#include "eqgrad/csv.hpp"
#include "eqgrad/rng.hpp"

namespace eqgrad {

std::vector<std::string> DiagnosticsRecord::csv_columns() {
  return {"cosine_vs_exact", "eps_error",   "lhs_ascent", "lhs_ascent_fro",
          "rhs_ascent",      "lhs_reduced", "rhs_reduced", "inner_product",
          "rho_F",           "rho_F_lambda", "l1_exact",   "l1_phantom",
          "sigma_min_zero"};
}

std::vector<std::string> DiagnosticsRecord::csv_cells() const {
  return {cell(cosine_vs_exact), cell(eps_error),   cell(lhs_ascent),
          cell(lhs_ascent_fro),  cell(rhs_ascent),  cell(lhs_reduced),
          cell(rhs_reduced),     cell(inner_product), cell(rho_F),
          cell(rho_F_lambda),    cell(l1_exact),    cell(l1_phantom),
          cell(sigma_min_zero)};
}

std::string DiagnosticsRecord::to_csv_row() const {
  std::string out;
  const auto cells = csv_cells();
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  return out;
}

Mat damped_jacobian(const Mat& j_h, double lambda) {
  Mat b = scale(lambda, j_h);
  for (std::size_t i = 0; i < b.rows; ++i) b(i, i) += 1.0 - lambda;
  return b;
}

Mat neumann_partial_sum(const Mat& b, int k) {
  if (k < 1) throw ParameterError("neumann_partial_sum: k must be >= 1");
  Mat sum = Mat::identity(b.rows);
  Mat power = Mat::identity(b.rows);
  for (int t = 1; t < k; ++t) {
    power = gemm(power, b);
    sum = add(sum, power);
  }
  return sum;
}

Mat backward_matrix(const Mat& j_theta, const Mat& j_h, int k, double lambda) {
  const Mat b = damped_jacobian(j_h, lambda);
  return scale(lambda, gemm(j_theta, neumann_partial_sum(b, k)));
}

DiagnosticsRecord descent_condition_check(const EqModule& m, const Vec& h_star,
                                          const Vec& u, int k, double lambda,
                                          const Vec* v, std::uint64_t seed) {
  if (k < 1) throw ParameterError("descent_condition_check: k must be >= 1");
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw ParameterError("descent_condition_check: lambda must lie in (0, 1]");
  }
  const auto [j_h, j_theta] = materialize_jacobians(m, h_star, u);
  const std::size_t d = m.dim();

  const Mat b = damped_jacobian(j_h, lambda);
  const Mat series = neumann_partial_sum(b, k);
  const Mat d_mat = scale(lambda, series);  // inverse estimate
  const Mat a_mat = gemm(j_theta, d_mat);
  const Mat i_minus_jh = sub(Mat::identity(d), j_h);

  DiagnosticsRecord rec;
  const Mat err = sub(gemm(a_mat, i_minus_jh), j_theta);
  rec.lhs_ascent = spectral_norm(err);
  rec.lhs_ascent_fro = frobenius_norm(err);

  const SvdExtremes sv = svd_extremes(j_theta);
  if (sv.sigma_min < 1e-300) {
    rec.sigma_min_zero = true;
    rec.rhs_ascent = 0.0;
    rec.rhs_reduced = 0.0;
  } else {
    rec.rhs_ascent = sv.sigma_min * sv.sigma_min / sv.sigma_max;
    rec.rhs_reduced = 1.0 / (sv.kappa * sv.kappa);
  }
  const Mat err_reduced = sub(gemm(d_mat, i_minus_jh), Mat::identity(d));
  rec.lhs_reduced = spectral_norm(err_reduced);

  Vec probe;
  if (v != nullptr) {
    probe = *v;
  } else {
    RngStream rng = rng_stream(seed, "descent-probe");
    probe = Vec(d);
    for (double& x : probe) x = rng.normal();
  }
  const Vec estimate = matvec(a_mat, probe);
  const Vec exact = matvec(j_theta, dense_solve(i_minus_jh, probe));
  rec.inner_product = dot(estimate, exact);
  return rec;
}

double neumann_truncation_error(const EqModule& m, const Vec& h_star,
                                const Vec& u, int k, double lambda) {
  if (k < 1) throw ParameterError("neumann_truncation_error: k must be >= 1");
  if (!(lambda > 0.0 && lambda <= 1.0)) {
    throw ParameterError("neumann_truncation_error: lambda must lie in (0, 1]");
  }
  const auto [j_h, j_theta] = materialize_jacobians(m, h_star, u);
  (void)j_theta;
  const Mat b = damped_jacobian(j_h, lambda);
  const Mat d_mat = scale(lambda, neumann_partial_sum(b, k));
  const Mat inv = dense_inverse(sub(Mat::identity(m.dim()), j_h));
  return spectral_norm(sub(d_mat, inv));
}

SpectralRadiusReport spectral_radius_report(const EqModule& m, const Vec& h_star,
                                            const Vec& u, double lambda,
                                            std::uint64_t seed) {
  const auto [j_h, j_theta] = materialize_jacobians(m, h_star, u);
  (void)j_theta;
  const Mat b = damped_jacobian(j_h, lambda);
  const auto r1 = power_iteration_rho(j_h, 2000, 1e-10, seed);
  const auto r2 = power_iteration_rho(b, 2000, 1e-10, seed);
  return {r1.value, r2.value, r1.converged && r2.converged};
}

DiagnosticsRecord compare_gradients(const PhantomGradient& exact,
                                    const PhantomGradient& candidate) {
  const Vec e = concat(exact.grad_theta, exact.grad_u);
  const Vec c = concat(candidate.grad_theta, candidate.grad_u);
  if (norm2(e) == 0.0) {
    throw ZeroVectorError("compare_gradients: exact gradient is zero");
  }
  DiagnosticsRecord rec;
  rec.cosine_vs_exact = norm2(c) == 0.0 ? 0.0 : cosine_similarity(e, c);
  rec.eps_error = norm2(sub(c, e));
  rec.l1_exact = norm1(e);
  rec.l1_phantom = norm1(c);
  return rec;
}

}  // namespace eqgrad
