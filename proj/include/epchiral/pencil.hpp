// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <complex>
#include <vector>

#include <Eigen/Dense>

namespace epchiral {

using cplx = std::complex<double>;
using RMatrix = Eigen::MatrixXd;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;

/// Numerical thresholds shared by the modules. The CLI can override them.
struct Tolerances {
  double symmetry = 1e-12;       ///< absolute, per entry, on loaded matrices
  double input_symmetry = 1e-10; ///< absolute, per entry, on eigendecompose input
  double eig_residual = 1e-10;   ///< relative to the Frobenius norm of H
  double near_defective = 1e-6;  ///< unit-scaled self-orthogonality floor
  double newton_residual = 1e-9;
  int max_qr_iterations = 0;     ///< 0 keeps the solver default budget
};

/// The linear pencil H(lambda) = H0 + lambda H1 with real symmetric H0, H1.
class MatrixPencil {
public:
  MatrixPencil(RMatrix h0, RMatrix h1, double symmetry_tol = Tolerances{}.symmetry);

  int n() const { return static_cast<int>(h0_.rows()); }
  const RMatrix& h0() const { return h0_; }
  const RMatrix& h1() const { return h1_; }

  /// Returns Q H0 Q^T, Q H1 Q^T for a real orthogonal Q.
  MatrixPencil conjugated(const RMatrix& q) const;

private:
  RMatrix h0_;
  RMatrix h1_;
};

/// H0 + lambda H1. Complex symmetric, not Hermitian, for complex lambda.
CMatrix evaluate(const MatrixPencil& pencil, cplx lambda);

/// Unconjugated bilinear product u^T v.
inline cplx bilinear(const CVector& u, const CVector& v) {
  return (u.transpose() * v)(0, 0);
}

/// Right eigensystem of a complex symmetric matrix. The left eigenvectors are
/// the unconjugated transposes of the right ones and are never stored.
struct EigenSystem {
  cplx lambda{0.0, 0.0};
  std::vector<cplx> values;    ///< ascending real part, then imaginary part
  CMatrix right_vectors;       ///< column k belongs to values[k]
  std::vector<cplx> biortho_norms; ///< psi_k^T psi_k
  std::vector<bool> near_defective;///< set by biorthogonal_normalize

  int size() const { return static_cast<int>(values.size()); }
  CVector vector(int k) const { return right_vectors.col(k); }
};

/// |psi^T psi| of level k after scaling psi to unit 2-norm. Lies in [0, 1].
struct SelfOrthogonality {
  int level_index = 0;
  double value = 0.0;
};

/// Full eigensystem of a complex symmetric matrix.
///
/// Eigenvectors come back with unit 2-norm. Their phase is fixed so that
/// psi^T psi is real and non-negative and the largest component has a
/// positive real part; at real lambda the vectors are therefore real.
/// Throws NonSymmetricInput or ConvergenceFailure.
EigenSystem eigendecompose(const CMatrix& matrix, const Tolerances& tol = {});

/// Convenience: eigendecompose(evaluate(pencil, lambda)) with lambda recorded.
EigenSystem eigensystem_at(const MatrixPencil& pencil, cplx lambda, const Tolerances& tol = {});

SelfOrthogonality self_orthogonality(const EigenSystem& system, int k);

/// Rescales every vector to chi_k = psi_k / sqrt(psi_k^T psi_k) (principal
/// branch) so that chi_k^T chi_k = 1. Levels whose unit-scaled
/// self-orthogonality is below tol.near_defective are flagged and left alone.
EigenSystem biorthogonal_normalize(const EigenSystem& system, const Tolerances& tol = {});

bool any_near_defective(const EigenSystem& system);

/// Max-entry magnitude of sum_k psi_k psi_k^T / (psi_k^T psi_k) - I.
/// Throws DefectivePresent when a level is flagged (or would be flagged).
double completeness_residual(const EigenSystem& system, const Tolerances& tol = {});

/// Largest eigenvalue magnitude; the energy unit used by relative thresholds.
double spectral_scale(const EigenSystem& system);

/// Max over k of ||H psi_k - E_k psi_k||_2.
double max_eigen_residual(const CMatrix& matrix, const EigenSystem& system);

} // namespace epchiral
