// Copyright (c) 2026 the eqgrad authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace eqgrad {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Operand shapes do not agree. Message names both shapes.
struct DimensionError : Error {
  using Error::Error;
};

/// LU pivot fell below the singularity threshold.
struct SingularMatrixError : Error {
  using Error::Error;
};

/// A parameter is outside its permitted range. Message names the range.
struct ParameterError : Error {
  using Error::Error;
};

/// A dense-materialization request exceeded the small-instance limit.
struct ScaleGuardError : Error {
  using Error::Error;
};

/// Undefined quantity on a zero vector (angles, relative residuals).
struct ZeroVectorError : Error {
  using Error::Error;
};

/// API misuse, e.g. a reverse sweep without a stored trajectory.
struct UsageError : Error {
  using Error::Error;
};

/// Config file rejected; message cites line number and key.
struct ConfigError : Error {
  using Error::Error;
};

/// An iteration produced NaN/Inf. Carries the last finite iterate and,
/// when the caller requested tracing, the per-iteration history.
struct DivergenceError : Error {
  DivergenceError(const std::string& what, std::vector<double> last,
                  std::vector<std::vector<double>> trace = {})
      : Error(what), last_finite_iterate(std::move(last)),
        iterate_trace(std::move(trace)) {}
  std::vector<double> last_finite_iterate;
  std::vector<std::vector<double>> iterate_trace;
};

}  // namespace eqgrad
