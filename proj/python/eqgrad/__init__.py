# Copyright (c) 2026 the eqgrad authors
# SPDX-License-Identifier: Apache-2.0
"""Equilibrium-layer solvers and gradient oracles.

Thin Python surface over the C++ core: build an equilibrium module, solve
its fixed point, and compare exact implicit-differentiation gradients with
the truncated unrolling / series estimators.
"""

from eqgrad._core import (
    ConfigError,
    DimensionError,
    DivergenceError,
    EqModule,
    FixedPointSolution,
    ParameterError,
    PhantomGradient,
    ScaleGuardError,
    SingularMatrixError,
    UsageError,
    ZeroVectorError,
    bptt_exact,
    compare_gradients,
    cosine_similarity,
    dense_inverse,
    descent_condition_check,
    finite_difference_check,
    ift_exact,
    load_module,
    make_dataset,
    make_module,
    make_synthetic,
    neumann_truncation_error,
    npg,
    one_step,
    power_iteration_rho,
    power_iteration_sigma,
    relative_residual,
    solve,
    spectral_radius_report,
    svd_extremes,
    upg,
)

__all__ = [
    "ConfigError",
    "DimensionError",
    "DivergenceError",
    "EqModule",
    "FixedPointSolution",
    "ParameterError",
    "PhantomGradient",
    "ScaleGuardError",
    "SingularMatrixError",
    "UsageError",
    "ZeroVectorError",
    "bptt_exact",
    "compare_gradients",
    "cosine_similarity",
    "dense_inverse",
    "descent_condition_check",
    "finite_difference_check",
    "ift_exact",
    "load_module",
    "make_dataset",
    "make_module",
    "make_synthetic",
    "neumann_truncation_error",
    "npg",
    "one_step",
    "power_iteration_rho",
    "power_iteration_sigma",
    "relative_residual",
    "solve",
    "spectral_radius_report",
    "svd_extremes",
    "upg",
]

__version__ = "0.1.0"
