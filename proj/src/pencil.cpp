// SPDX-License-Identifier: Apache-2.0
#include "epchiral/pencil.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Eigenvalues>

#include "epchiral/errors.hpp"

namespace epchiral {

namespace {

template <typename Matrix>
double max_asymmetry(const Matrix& m) {
  return (m - m.transpose()).cwiseAbs().maxCoeff();
}

// Rotates psi so that psi^T psi is real non-negative and the dominant
// component has positive real part. Keeps real vectors real.
void fix_phase(Eigen::Ref<CVector> psi) {
  const cplx self = bilinear(psi, psi);
  if (std::abs(self) > 1e-8) {
    psi *= std::polar(1.0, -0.5 * std::arg(self));
  } else {
    Eigen::Index imax = 0;
    psi.cwiseAbs().maxCoeff(&imax);
    psi *= std::polar(1.0, -std::arg(psi(imax)));
  }
  Eigen::Index imax = 0;
  psi.cwiseAbs().maxCoeff(&imax);
  if (psi(imax).real() < 0.0) {
    psi = -psi;
  }
}

// A few steps of shifted inverse iteration, used only when the Schur
// back-substitution leaves a residual above tolerance.
void polish(const CMatrix& a, cplx value, Eigen::Ref<CVector> psi) {
  const double shift = 1e-10 * std::max(1.0, a.norm());
  CMatrix shifted = a;
  shifted.diagonal().array() -= value + shift;
  Eigen::PartialPivLU<CMatrix> lu(shifted);
  for (int it = 0; it < 3; ++it) {
    CVector next = lu.solve(psi);
    const double norm = next.norm();
    if (!std::isfinite(norm) || norm == 0.0) {
      return;
    }
    psi = next / norm;
  }
}

} // namespace

MatrixPencil::MatrixPencil(RMatrix h0, RMatrix h1, double symmetry_tol)
    : h0_(std::move(h0)), h1_(std::move(h1)) {
  if (h0_.rows() < 2 || h0_.rows() != h0_.cols()) {
    throw InvalidArgument("h0 must be square with dimension >= 2");
  }
  if (h1_.rows() != h0_.rows() || h1_.cols() != h0_.cols()) {
    throw InvalidArgument("h0 and h1 dimensions differ");
  }
  if (!h0_.allFinite() || !h1_.allFinite()) {
    throw InvalidArgument("pencil entries must be finite");
  }
  if (max_asymmetry(h0_) > symmetry_tol) {
    throw NonSymmetricInput("h0 is not symmetric");
  }
  if (max_asymmetry(h1_) > symmetry_tol) {
    throw NonSymmetricInput("h1 is not symmetric");
  }
}

MatrixPencil MatrixPencil::conjugated(const RMatrix& q) const {
  RMatrix a = q * h0_ * q.transpose();
  RMatrix b = q * h1_ * q.transpose();
  // Symmetrize away the rounding of the two products.
  a = 0.5 * (a + a.transpose()).eval();
  b = 0.5 * (b + b.transpose()).eval();
  return MatrixPencil(std::move(a), std::move(b));
}

CMatrix evaluate(const MatrixPencil& pencil, cplx lambda) {
  CMatrix h = pencil.h0().cast<cplx>();
  h += lambda * pencil.h1().cast<cplx>();
  return h;
}

EigenSystem eigendecompose(const CMatrix& matrix, const Tolerances& tol) {
  const auto n = matrix.rows();
  if (n == 0 || n != matrix.cols()) {
    throw InvalidArgument("matrix must be square and non-empty");
  }
  if (!matrix.allFinite()) {
    throw InvalidArgument("matrix has non-finite entries");
  }
  if (max_asymmetry(matrix) > tol.input_symmetry) {
    throw NonSymmetricInput("matrix is not complex symmetric");
  }

  Eigen::ComplexEigenSolver<CMatrix> solver;
  if (tol.max_qr_iterations > 0) {
    solver.setMaxIterations(tol.max_qr_iterations);
  }
  solver.compute(matrix, true);
  if (solver.info() != Eigen::Success) {
    throw ConvergenceFailure("complex Schur iteration did not converge");
  }

  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  const auto& ev = solver.eigenvalues();
  std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
    if (ev(a).real() != ev(b).real()) {
      return ev(a).real() < ev(b).real();
    }
    return ev(a).imag() < ev(b).imag();
  });

  EigenSystem out;
  out.values.resize(static_cast<std::size_t>(n));
  out.right_vectors.resize(n, n);
  out.biortho_norms.resize(static_cast<std::size_t>(n));
  out.near_defective.assign(static_cast<std::size_t>(n), false);

  const double scale = std::max(matrix.norm(), std::numeric_limits<double>::min());
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto src = order[static_cast<std::size_t>(k)];
    const cplx value = ev(src);
    CVector psi = solver.eigenvectors().col(src);
    psi.normalize();
    if ((matrix * psi - value * psi).norm() > tol.eig_residual * scale) {
      polish(matrix, value, psi);
    }
    fix_phase(psi);
    out.values[static_cast<std::size_t>(k)] = value;
    out.right_vectors.col(k) = psi;
    out.biortho_norms[static_cast<std::size_t>(k)] = bilinear(psi, psi);
  }
  return out;
}

EigenSystem eigensystem_at(const MatrixPencil& pencil, cplx lambda, const Tolerances& tol) {
  EigenSystem system = eigendecompose(evaluate(pencil, lambda), tol);
  system.lambda = lambda;
  return system;
}

SelfOrthogonality self_orthogonality(const EigenSystem& system, int k) {
  const CVector psi = system.vector(k);
  const double norm2 = psi.squaredNorm();
  SelfOrthogonality out;
  out.level_index = k;
  out.value = norm2 > 0.0 ? std::min(1.0, std::abs(bilinear(psi, psi)) / norm2) : 0.0;
  return out;
}

EigenSystem biorthogonal_normalize(const EigenSystem& system, const Tolerances& tol) {
  EigenSystem out = system;
  for (int k = 0; k < system.size(); ++k) {
    const auto idx = static_cast<std::size_t>(k);
    if (self_orthogonality(system, k).value < tol.near_defective) {
      out.near_defective[idx] = true;
      continue;
    }
    const CVector psi = system.vector(k);
    const cplx root = std::sqrt(bilinear(psi, psi));
    out.right_vectors.col(k) = psi / root;
    out.biortho_norms[idx] = bilinear(out.right_vectors.col(k), out.right_vectors.col(k));
    out.near_defective[idx] = false;
  }
  return out;
}

bool any_near_defective(const EigenSystem& system) {
  return std::any_of(system.near_defective.begin(), system.near_defective.end(),
                     [](bool f) { return f; });
}

double completeness_residual(const EigenSystem& system, const Tolerances& tol) {
  const int n = system.size();
  for (int k = 0; k < n; ++k) {
    if (system.near_defective[static_cast<std::size_t>(k)] ||
        self_orthogonality(system, k).value < tol.near_defective) {
      throw DefectivePresent("level " + std::to_string(k) + " is self-orthogonal");
    }
  }
  CMatrix sum = CMatrix::Zero(n, n);
  for (int k = 0; k < n; ++k) {
    const CVector psi = system.vector(k);
    sum += (psi * psi.transpose()) / bilinear(psi, psi);
  }
  sum -= CMatrix::Identity(n, n);
  return sum.cwiseAbs().maxCoeff();
}

double spectral_scale(const EigenSystem& system) {
  double scale = 0.0;
  for (const auto& e : system.values) {
    scale = std::max(scale, std::abs(e));
  }
  return scale > 0.0 ? scale : 1.0;
}

double max_eigen_residual(const CMatrix& matrix, const EigenSystem& system) {
  double worst = 0.0;
  for (int k = 0; k < system.size(); ++k) {
    const CVector psi = system.vector(k);
    worst = std::max(worst, (matrix * psi - system.values[static_cast<std::size_t>(k)] * psi).norm());
  }
  return worst;
}

} // namespace epchiral
