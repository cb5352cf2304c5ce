// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "epchiral/pencil.hpp"

namespace epchiral {

/// Indices (nu, nu+1) of two adjacent levels in the real-axis ordering.
using LevelPair = std::pair<int, int>;

/// A located square-root branch point of the spectrum.
struct ExceptionalPoint {
  cplx lambda_c;
  cplx e_c;
  LevelPair pair{0, 1};
  double residual = 0.0;          ///< scaled coalescence residual at the solution
  double lambda_seed = 0.0;       ///< real reference point the pair labels refer to
  int iterations = 0;
  std::optional<int> chirality;   ///< +1 (ratio +i) or -1 (ratio -i)
};

/// Leading Puiseux data: gap = 2 |e1| r^exponent.
struct PuiseuxFit {
  double exponent = 0.0;
  double leading_coeff_magnitude = 0.0;
  std::pair<double, double> fit_window{0.0, 0.0};
  double fit_residual = 0.0;   ///< rms of the log-gap residuals
};

/// A local minimum of an adjacent-level gap on the real axis.
struct SeedRegion {
  double lambda_seed = 0.0;
  LevelPair pair{0, 1};
  double gap_at_seed = 0.0;
};

struct CharPoly {
  cplx p;      ///< det(H(lambda) - e) = prod_k (E_k - e)
  cplx dp_de;  ///< derivative of p with respect to e
};

struct NewtonOptions {
  int max_iterations = 50;
  int max_halvings = 8;
  double residual_tol = 1e-9;
  double update_tol = 1e-12;
  double fd_step = 1e-7;
  double diabolic_self_orthogonality = 0.9;
};

/// Characteristic polynomial and its energy derivative, evaluated from the
/// eigenvalues of H(lambda).
CharPoly char_poly_eval(const MatrixPencil& pencil, cplx lambda, cplx e, const Tolerances& tol = {});
CharPoly char_poly_eval(const std::vector<cplx>& eigenvalues, cplx e);

/// One seed per interior local minimum of each adjacent gap E_{k+1} - E_k
/// over a uniform real sweep; each minimum is refined on its bracket.
/// Throws EmptyInterval or InvalidArgument (steps < 16).
std::vector<SeedRegion> seed_from_sweep(const MatrixPencil& pencil,
                                        std::pair<double, double> lambda_interval, int steps,
                                        const Tolerances& tol = {});

/// Damped Newton on p = 0, dp/dE = 0 in (lambda, E), started off the real
/// axis from a seed. Element 0 is the solution, element 1 its complex
/// conjugate partner. When the iteration lands on the branch point of a
/// different pair, pair and lambda_seed are reset from the real axis below
/// it. Throws NoConvergence or ConvergedToDiabolic.
std::array<ExceptionalPoint, 2> newton_ep(const MatrixPencil& pencil, const SeedRegion& seed,
                                          const NewtonOptions& options = {},
                                          const Tolerances& tol = {});

/// Same iteration, started at an arbitrary complex guess on the pair of
/// levels closest to each other there. The pair labels are resolved by
/// continuing the coalescing levels down to the real axis below the EP.
std::array<ExceptionalPoint, 2> newton_ep_from_guess(const MatrixPencil& pencil, cplx lambda_guess,
                                                     const NewtonOptions& options = {},
                                                     const Tolerances& tol = {});

/// Samples |E_a - E_b| of the coalescing pair on two rays out of lambda_c,
/// r log-spaced over [1e-6, 1e-2] (1 + |lambda_c|), and fits log gap against
/// log r. Throws NotABranchPoint when the exponent is outside (0.4, 0.6).
PuiseuxFit verify_ep(const MatrixPencil& pencil, const ExceptionalPoint& ep, const Tolerances& tol = {});

/// Same fit without the branch-point check.
PuiseuxFit fit_puiseux(const MatrixPencil& pencil, const ExceptionalPoint& ep, const Tolerances& tol = {});

/// Seeds from a sweep, runs Newton on each and keeps the distinct solutions
/// (and their conjugates). Seeds that fail are skipped.
std::vector<ExceptionalPoint> locate_eps(const MatrixPencil& pencil,
                                         std::pair<double, double> lambda_interval, int steps,
                                         const NewtonOptions& options = {},
                                         const Tolerances& tol = {});

/// Indices of the two eigenvalues closest to e, ascending.
LevelPair closest_pair(const std::vector<cplx>& values, cplx e);

} // namespace epchiral
