// Copyright (c) 2026 the eqgrad authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>

#include "eqgrad/densemath.hpp"

namespace eqgrad {

enum class ModuleKind { LinearContraction, AffineTanh };

// Equilibrium function F(h, z) with z = [u, theta], theta = [W; b] flattened
// row-major. Both kinds act on h + u:
//   LinearContraction:  F = W (h + u) + b
//   AffineTanh:         F = tanh(W (h + u) + b)
// The map is target_lipschitz-Lipschitz in h because tanh is 1-Lipschitz and
// |W|_2 is kept <= target_lipschitz by spectral normalization.
//
// Derivative convention used across the project: jacobian entries are stored
// transposed, J[i][j] = dF_j / dx_i, so that matvec(J, v) equals the adjoint
// application vjp(v). All gradient formulas then read as plain left-to-right
// matrix-vector products. Keep this in mind before adding any transpose.
struct EqModule {
  ModuleKind kind = ModuleKind::AffineTanh;
  Mat W;
  Vec b;
  double target_lipschitz = 0.9;
  double sigma_cache = 0.0;  // last power-iteration estimate of sigma_max(W_raw)
  std::uint64_t seed = 0;    // construction seed, kept for serialization

  std::size_t dim() const { return b.size(); }
  std::size_t theta_dim() const { return W.data.size() + b.size(); }
};

/// Seeded synthetic instance: W = target_L * S / sigma_max(S) with
/// S = (R + R^T)/2, R iid uniform[-1,1]; b iid uniform[-0.1, 0.1].
EqModule make_synthetic(std::size_t d, double target_L, std::uint64_t seed,
                        ModuleKind kind = ModuleKind::AffineTanh);

/// Wrap explicit weights without normalization (tests, serialization).
EqModule make_module(ModuleKind kind, Mat W, Vec b, double target_L);

/// Rescale W down to target_lipschitz when its estimated sigma_max exceeds
/// it; no-op otherwise. Updates sigma_cache.
void renormalize(EqModule& m);

Vec forward(const EqModule& m, const Vec& h, const Vec& u);
/// Adjoint of dF/dh at (h, u) applied to v.
Vec vjp_h(const EqModule& m, const Vec& h, const Vec& u, const Vec& v);
/// Adjoint of dF/du; identical in form to vjp_h since F sees h + u.
Vec vjp_u(const EqModule& m, const Vec& h, const Vec& u, const Vec& v);
/// Adjoint of dF/dtheta, flattened over [W row-major; b].
Vec vjp_theta(const EqModule& m, const Vec& h, const Vec& u, const Vec& v);

/// Dense transposed Jacobians (J_h: d x d, J_theta: d_theta x d), built
/// column-by-column from VJPs of basis vectors; matvec(J, v) == vjp(v).
/// Guarded to dim() <= 256.
std::pair<Mat, Mat> materialize_jacobians(const EqModule& m, const Vec& h,
                                          const Vec& u);

Vec get_theta(const EqModule& m);
void set_theta(EqModule& m, const Vec& theta);

/// Text serialization; round-trips exactly (shortest round-trip decimals).
void save_module(const EqModule& m, std::ostream& os);
EqModule load_module(std::istream& is);
void save_module_file(const EqModule& m, const std::string& path);
EqModule load_module_file(const std::string& path);

std::string to_string(ModuleKind kind);
ModuleKind module_kind_from_string(const std::string& s);

}  // namespace eqgrad
