// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>
#include <vector>

#include "epchiral/ep_locator.hpp"
#include "epchiral/pencil.hpp"

namespace epchiral {

/// A circle in the lambda-plane traversed turns times.
struct LoopPath {
  cplx center;
  double radius = 0.1;
  int n_steps = 512;
  int orientation = +1;   ///< +1 counterclockwise, -1 clockwise
  int turns = 1;

  /// n_steps * turns + 1 samples; the last equals the first exactly.
  std::vector<cplx> samples() const;
};

/// A permutation with signs: after the loop, track j has become
/// signs[j] * chi_{permutation[j]} of the starting basis.
struct SignedPermutation {
  std::vector<int> permutation;
  std::vector<int> signs;

  static SignedPermutation identity(int n);
  bool is_identity() const;
  /// Result of traversing this, then other.
  SignedPermutation then(const SignedPermutation& other) const;
  SignedPermutation power(int k) const;
  SignedPermutation inverse() const;
  bool operator==(const SignedPermutation&) const = default;
};

struct MonodromyResult {
  std::vector<int> permutation;
  std::vector<int> signs;
  int loops_to_identity = 0;   ///< order of the one-turn element (0 if above 8)
  double min_overlap = 1.0;

  SignedPermutation as_signed_permutation() const { return {permutation, signs}; }
};

struct ContinuationOptions {
  double overlap_threshold = 0.7;
  int max_bisections = 12;
  double ep_exclusion = 1e-10;
  bool keep_sample_vectors = false;
};

/// Eigensystem carried continuously along a path. Tracks are labelled by
/// the sorted index at the first sample.
struct ContinuationState {
  std::vector<cplx> lambdas;                  ///< accepted points, including bisection points
  std::vector<std::vector<cplx>> tracks;      ///< tracks[j][step]
  CMatrix start_vectors;                      ///< biorthonormal chi at the first sample
  CMatrix vectors;                            ///< tracked chi at the last sample, column j = track j
  std::vector<int> permutation;               ///< sorted index at the last sample of track j
  std::vector<int> signs;                     ///< sign relative to the solver gauge at the last sample
  double min_overlap_seen = 1.0;
  /// Index into lambdas of every input sample (bisection points interleave).
  std::vector<std::size_t> sample_index;
  /// Tracked chi at every input sample; filled when keep_sample_vectors is set.
  std::vector<CMatrix> sample_vectors;
};

/// Analytic continuation of the biorthonormal eigensystem along samples.
/// Steps are matched by the largest unconjugated overlap chi_prev^T chi_next
/// (greedy, best first) and vector signs keep Re(overlap) > 0; steps whose
/// matched overlaps leave [threshold, 1/threshold] are bisected.
/// Throws MatchingAmbiguous, SampleThroughEP.
ContinuationState continue_along(const MatrixPencil& pencil, const std::vector<cplx>& samples,
                                 const std::vector<cplx>& known_eps = {},
                                 const ContinuationOptions& options = {},
                                 const Tolerances& tol = {});

/// Monodromy of the closed loop. Transposed pairs (a, b) are reported in the
/// gauge Re(chi_a^T H1 chi_b) < 0 at the loop start, which does not depend
/// on the basis the pencil is written in. When known_eps is non-empty the
/// loop must enclose exactly one of them (LoopEnclosure otherwise).
MonodromyResult monodromy(const MatrixPencil& pencil, const LoopPath& loop,
                          const std::vector<cplx>& known_eps = {},
                          const ContinuationOptions& options = {},
                          const Tolerances& tol = {});

/// Monodromy of an explicit closed sample list. Throws NotClosed.
MonodromyResult monodromy_of_samples(const MatrixPencil& pencil, const std::vector<cplx>& samples,
                                     const ContinuationOptions& options = {},
                                     const Tolerances& tol = {});

/// Smallest k in [1, max_order] with element^k = identity, else 0.
int order_of(const SignedPermutation& element, int max_order = 8);

struct CrossingReport {
  bool energies_cross = false;
  bool widths_cross = false;
  double crossing_parameter = 0.0;
  std::pair<int, int> tracks{0, 1};   ///< track labels of the isolated pair
};

/// Continues along lambda(t) = t + i offset and reports whether the real
/// parts (energies) or the imaginary parts (widths) of the coalescing pair
/// intersect. Throws PathThroughEP.
CrossingReport classify_crossing(const MatrixPencil& pencil, const ExceptionalPoint& ep, double offset,
                                 std::pair<double, double> t_range, int steps,
                                 ContinuationState* state_out = nullptr,
                                 const ContinuationOptions& options = {},
                                 const Tolerances& tol = {});

/// Uniform samples of a straight segment, both ends included.
std::vector<cplx> segment(cplx from, cplx to, int steps);

} // namespace epchiral
