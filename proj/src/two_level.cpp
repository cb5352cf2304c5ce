// SPDX-License-Identifier: Apache-2.0
#include "epchiral/two_level.hpp"

#include <cmath>

#include "epchiral/errors.hpp"

namespace epchiral {

namespace {
constexpr double kDiabolicTol = 1e-9;
constexpr double kDegenerateTol = 1e-12;
constexpr double kAtEpTol = 1e-12;
} // namespace

bool TwoLevelParams::diabolic() const {
  return std::abs(std::sin(2.0 * phi)) < kDiabolicTol;
}

bool TwoLevelParams::degenerate() const {
  return std::abs(omega1 - omega2) < kDegenerateTol;
}

Eigen::Matrix2d rotation(double phi) {
  const double c = std::cos(phi);
  const double s = std::sin(phi);
  Eigen::Matrix2d u;
  u << c, -s, s, c;
  return u;
}

MatrixPencil assemble(const TwoLevelParams& p) {
  RMatrix h0 = Eigen::Vector2d(p.eps1, p.eps2).asDiagonal();
  const Eigen::Matrix2d u = rotation(p.phi);
  Eigen::Matrix2d h1 = u * Eigen::Vector2d(p.omega1, p.omega2).asDiagonal() * u.transpose();
  h1(1, 0) = h1(0, 1);
  return MatrixPencil(h0, RMatrix(h1));
}

cplx resultant_R(const TwoLevelParams& p, cplx lambda) {
  const double de = p.eps1 - p.eps2;
  const double dw = p.omega1 - p.omega2;
  if (p.degenerate()) {
    const cplx half_dw = 0.5 * lambda * dw;
    return std::sqrt(0.25 * de * de + half_dw * half_dw + 0.5 * lambda * de * dw * std::cos(2.0 * p.phi));
  }
  // Factored through its roots, so R vanishes exactly at the returned
  // exceptional points instead of at the sqrt(rounding) level.
  const double ratio = -de / dw;
  const cplx plus = ratio * std::polar(1.0, 2.0 * p.phi);
  const cplx minus = ratio * std::polar(1.0, -2.0 * p.phi);
  return std::sqrt(0.25 * dw * dw * (lambda - plus) * (lambda - minus));
}

std::pair<cplx, cplx> eigenvalues_closed_form(const TwoLevelParams& p, cplx lambda) {
  const cplx mean = 0.5 * (p.eps1 + p.eps2 + lambda * (p.omega1 + p.omega2));
  const cplx r = resultant_R(p, lambda);
  return {mean + r, mean - r};
}

ClosedFormEps exceptional_points_closed_form(const TwoLevelParams& p) {
  if (p.degenerate()) {
    throw NoFiniteEP("omega1 == omega2");
  }
  const double ratio = -(p.eps1 - p.eps2) / (p.omega1 - p.omega2);
  ClosedFormEps out;
  out.diabolic = p.diabolic();
  if (out.diabolic) {
    // The pair collapses onto the real crossing.
    const double real = ratio * std::cos(2.0 * p.phi);
    out.plus = out.minus = cplx(real, 0.0);
    return out;
  }
  out.plus = ratio * std::polar(1.0, 2.0 * p.phi);
  out.minus = ratio * std::polar(1.0, -2.0 * p.phi);
  return out;
}

ThetaAngle theta_closed_form(const TwoLevelParams& p, cplx lambda) {
  if (!p.degenerate()) {
    const auto eps = exceptional_points_closed_form(p);
    if (std::abs(lambda - eps.plus) < kAtEpTol || std::abs(lambda - eps.minus) < kAtEpTol) {
      throw AtExceptionalPoint("eigenvector angle diverges at lambda_c");
    }
  }
  const double de = p.eps1 - p.eps2;
  const double dw = p.omega1 - p.omega2;
  const auto [e1, e2] = eigenvalues_closed_form(p, lambda);
  const cplx num = lambda * dw * std::sin(2.0 * p.phi);
  const cplx den = e1 - e2 + de + lambda * dw * std::cos(2.0 * p.phi);
  if (den == cplx(0.0, 0.0)) {
    throw InvalidArgument("tan(theta) denominator vanishes");
  }
  ThetaAngle out;
  out.tangent = num / den;
  out.value = std::atan(out.tangent);
  return out;
}

} // namespace epchiral
