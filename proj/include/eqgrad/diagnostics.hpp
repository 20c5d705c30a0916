// Copyright (c) 2026 the eqgrad authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "eqgrad/gradoracles.hpp"

namespace eqgrad {

// Per-evaluation measurements. Unset fields serialize as "nan".
// CSV column order is fixed by csv_columns() and documented in the README.
struct DiagnosticsRecord {
  double cosine_vs_exact = std::nan("");
  double eps_error = std::nan("");       // |candidate - exact|_2
  double lhs_ascent = std::nan("");      // |A (I - J_h) - J_theta|_2
  double lhs_ascent_fro = std::nan("");  // same, Frobenius norm
  double rhs_ascent = std::nan("");      // sigma_min^2 / sigma_max of J_theta
  double lhs_reduced = std::nan("");     // |D (I - J_h) - I|_2
  double rhs_reduced = std::nan("");     // 1 / kappa^2 of J_theta
  double inner_product = std::nan("");   // <A v, J_theta (I - J_h)^-1 v>
  double rho_F = std::nan("");
  double rho_F_lambda = std::nan("");
  double l1_exact = std::nan("");
  double l1_phantom = std::nan("");
  bool sigma_min_zero = false;  // warning: rhs collapsed to 0

  static std::vector<std::string> csv_columns();
  std::vector<std::string> csv_cells() const;
  std::string to_csv_row() const;
};

/// Ascent-direction check on dense materialized instances: builds the
/// truncated-series backward matrix A for (k, lambda) at h_star, the error
/// norms against J_theta, the reduced variant against the identity, and the
/// inner product between the resulting estimate and the exact gradient for
/// one probe vector v (supplied, or standard normal from seed).
DiagnosticsRecord descent_condition_check(const EqModule& m, const Vec& h_star,
                                          const Vec& u, int k, double lambda,
                                          const Vec* v = nullptr,
                                          std::uint64_t seed = 7);

/// |lambda * sum_{t<k} B^t - (I - J_h)^-1|_2 with B = lambda J_h + (1-lambda) I.
double neumann_truncation_error(const EqModule& m, const Vec& h_star,
                                const Vec& u, int k, double lambda);

struct SpectralRadiusReport {
  double rho_F = 0.0;
  double rho_F_lambda = 0.0;
  bool converged = true;
};

/// Power-iteration estimates of rho(J_h) and rho(lambda J_h + (1-lambda) I).
SpectralRadiusReport spectral_radius_report(const EqModule& m, const Vec& h_star,
                                            const Vec& u, double lambda,
                                            std::uint64_t seed);

/// Cosine / error-norm comparison over the concatenated [theta; u] gradients.
DiagnosticsRecord compare_gradients(const PhantomGradient& exact,
                                    const PhantomGradient& candidate);

// Dense helpers shared with the experiment runners (small instances only).
Mat damped_jacobian(const Mat& j_h, double lambda);           // B
Mat neumann_partial_sum(const Mat& b, int k);                 // sum_{t<k} B^t
Mat backward_matrix(const Mat& j_theta, const Mat& j_h, int k, double lambda);  // A

}  // namespace eqgrad
