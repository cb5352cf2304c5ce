// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <utility>

#include "epchiral/pencil.hpp"

namespace epchiral {

/// Parameters of H = diag(eps1, eps2) + lambda U(phi) diag(omega1, omega2) U(phi)^T.
struct TwoLevelParams {
  double eps1 = 0.0;
  double eps2 = 0.0;
  double omega1 = 0.0;
  double omega2 = 0.0;
  double phi = 0.0;

  /// |sin 2phi| < 1e-9: the two branch points merge into a real crossing.
  bool diabolic() const;
  /// |omega1 - omega2| < 1e-12: no finite exceptional point.
  bool degenerate() const;
};

/// Real 2x2 rotation [[cos, -sin], [sin, cos]].
Eigen::Matrix2d rotation(double phi);

/// Assembles the two-level pencil (H0 diagonal, H1 rotated).
MatrixPencil assemble(const TwoLevelParams& params);

/// Principal square root of the coalescence discriminant; E1,2 = mean +- R.
cplx resultant_R(const TwoLevelParams& params, cplx lambda);

/// (mean + R, mean - R), in that order.
std::pair<cplx, cplx> eigenvalues_closed_form(const TwoLevelParams& params, cplx lambda);

struct ClosedFormEps {
  cplx plus;   ///< uses exp(+2i phi)
  cplx minus;  ///< uses exp(-2i phi)
  bool diabolic = false;
};

/// lambda_c^{+-} = -(eps1 - eps2)/(omega1 - omega2) exp(+-2i phi).
/// Throws NoFiniteEP when omega1 == omega2.
ClosedFormEps exceptional_points_closed_form(const TwoLevelParams& params);

struct ThetaAngle {
  cplx value;      ///< theta
  cplx tangent;    ///< tan(theta) as computed from the closed form
};

/// Complex mixing angle of the eigenvectors (cos, sin) and (-sin, cos).
/// Throws AtExceptionalPoint within 1e-12 of either exceptional point, and
/// InvalidArgument where the denominator of the closed form vanishes.
ThetaAngle theta_closed_form(const TwoLevelParams& params, cplx lambda);

} // namespace epchiral
