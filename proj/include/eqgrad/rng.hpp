// Copyright (c) 2026 the eqgrad authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace eqgrad {

// Counter-based pseudo-random stream keyed by (master seed, label).
// Draw i depends only on the key and the counter, so streams can be
// handed to workers in any order and still reproduce bit-identically.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::string_view label);

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random mantissa bits.
  double uniform01();
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller; draws are consumed in pairs.
  double normal();

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// Stable 64-bit hash of a label (FNV-1a).
std::uint64_t hash_label(std::string_view label);

/// Convenience: stream for "<label>/<index>" sub-problems.
RngStream rng_stream(std::uint64_t master_seed, std::string_view label);
RngStream rng_stream(std::uint64_t master_seed, std::string_view label,
                     std::uint64_t index);

}  // namespace eqgrad
