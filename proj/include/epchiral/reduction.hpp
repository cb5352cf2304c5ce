// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <utility>
#include <vector>

#include "epchiral/ep_locator.hpp"
#include "epchiral/pencil.hpp"
#include "epchiral/two_level.hpp"

namespace epchiral {

/// Matrix elements of H0 and H1 between the two relevant biorthonormal
/// states chi_nu, chi_{nu+1} at lambda_ref.
///
/// The relative sign of the two states is fixed by Re(chi_nu^T H1 chi_{nu+1}) <= 0.
/// This choice is invariant under real orthogonal changes of basis and, for
/// the standard pencil diag(1,-1) + lambda [[0,1],[1,0]], makes
/// (chi_nu, chi_{nu+1}) a positively oriented frame of the defining basis.
struct EffectivePencil {
  Eigen::Matrix2cd h0;
  Eigen::Matrix2cd h1;
  CMatrix basis;         ///< n x 2, columns chi_nu, chi_{nu+1}
  cplx lambda_ref;
  LevelPair pair{0, 1};
};

struct EffectiveTwoLevel {
  TwoLevelParams params;
  CMatrix basis;
  cplx lambda_ref;
  LevelPair pair{0, 1};
  double imaginary_contamination = 0.0;   ///< max |Im| relative to max |h|
};

/// Throws NearDefectiveBasis when either state cannot be normalized.
EffectivePencil effective_pencil(const MatrixPencil& pencil, cplx lambda_ref, LevelPair pair,
                                 const Tolerances& tol = {});

/// eps from the eigenvalues of h0 (descending), omega and phi from h1 written
/// in the h0 eigenbasis (reached by a proper rotation) so that
/// h1 = U(phi) diag(omega1, omega2) U(phi)^T with omega1 >= omega2.
/// Throws NonRealEffective when the imaginary parts exceed 1e-6 relative.
EffectiveTwoLevel extract_effective_params(const Eigen::Matrix2cd& h0, const Eigen::Matrix2cd& h1);
EffectiveTwoLevel extract_effective_params(const EffectivePencil& eff);

/// lambda_c^{+-} of the effective parameters ({plus, minus}).
ClosedFormEps predict_ep(const EffectiveTwoLevel& eff);

struct ChiralityResult {
  int sign = 0;                                       ///< +1: c_nu/c_{nu+1} = +i
  std::vector<std::pair<cplx, cplx>> ratio_samples;   ///< (lambda, c_nu / c_{nu+1})
  double max_deviation = 0.0;                         ///< max |ratio - sign i|
  double ratio_stddev = 0.0;
  CVector psi_ep;                                     ///< unit 2-norm state at the EP
  double sample_radius = 0.0;
};

struct ChiralityOptions {
  int samples = 8;
  double relative_radius = 1e-3;   ///< circle radius / (1 + |lambda_c|)
  int steps_per_sample = 8;
};

/// Unit vector spanning the null space of H(lambda_c) - e_c (smallest right
/// singular vector).
CVector ep_state(const MatrixPencil& pencil, const ExceptionalPoint& ep);

/// Expansion coefficients c_k = chi_k^T psi over the biorthonormal
/// eigenbasis at lambda. Throws NearDefectiveBasis when a level is flagged.
std::vector<cplx> expansion_coefficients(const MatrixPencil& pencil, cplx lambda, const CVector& psi,
                                         const Tolerances& tol = {});

/// Determines the fixed ratio c_nu / c_{nu+1} = +-i of psi_EP expanded in the
/// coalescing states. The states are continued from the real reference point
/// ep.lambda_seed, where they carry the EffectivePencil sign convention, onto
/// a small circle around lambda_c. Throws InconsistentChirality,
/// NearDefectiveBasis.
ChiralityResult chirality(const MatrixPencil& pencil, const ExceptionalPoint& ep,
                          const ChiralityOptions& options = {}, const Tolerances& tol = {});

struct ReductionComparison {
  double max_distance = 0.0;
  std::vector<double> lambdas;
  std::vector<std::array<cplx, 2>> full;        ///< tracked pair of the full pencil
  std::vector<std::array<cplx, 2>> effective;   ///< closed-form two-level eigenvalues
  std::vector<std::array<double, 2>> lines;     ///< eps_j + lambda omega_j
};

/// Distance between the full pencil's pair and the effective model over a
/// real window, matched as a pair at every sample.
ReductionComparison compare_reduction(const MatrixPencil& pencil, const EffectiveTwoLevel& eff,
                                      std::pair<double, double> window, int steps,
                                      const Tolerances& tol = {});

} // namespace epchiral
