// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

#include "epchiral/pencil.hpp"

namespace epchiral {

/// SplitMix64 stream. Small, portable and bit-reproducible across platforms,
/// which std::normal_distribution is not.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Standard normal via Box-Muller; the second variate is cached.
  double normal();

private:
  std::uint64_t state_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

/// Symmetrized Gaussian matrix (A + A^T) / 2 with i.i.d. standard normal A.
RMatrix random_symmetric(int n, Rng& rng);

/// Pencil with h0 then h1 drawn by random_symmetric from Rng(seed).
MatrixPencil demo_pencil(int n, std::uint64_t seed);

/// Haar-distributed real orthogonal matrix (QR of a Gaussian, sign fixed).
RMatrix random_orthogonal(int n, Rng& rng);

} // namespace epchiral
