#pragma once

#include <cmath>
#include <string>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "adjwald/error.hpp"

namespace adjwald::numkit {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

inline bool is_symmetric(const Matrix& a, double rel_tol = 1e-10) {
  if (a.rows() != a.cols()) return false;
  for (Index u = 0; u < a.rows(); ++u) {
    for (Index v = u + 1; v < a.cols(); ++v) {
      if (std::fabs(a(u, v) - a(v, u)) > rel_tol * (1.0 + std::fabs(a(u, v)))) return false;
    }
  }
  return true;
}

/// Cholesky factor of a symmetric positive definite matrix. If the plain
/// factorization fails, the diagonal is jittered once by 1e-10 * mean(diag).
inline Eigen::LLT<Matrix> spd_factor(const Matrix& a) {
  if (a.rows() != a.cols()) fail(ErrorKind::NotPositiveDefinite, "matrix is not square");
  if (!a.allFinite()) fail(ErrorKind::NotPositiveDefinite, "matrix has non-finite entries");
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() == Eigen::Success && (llt.matrixLLT().diagonal().array() > 0.0).all()) return llt;

  const double jitter = 1e-10 * a.diagonal().mean();
  if (jitter > 0.0) {
    Matrix shifted = a;
    shifted.diagonal().array() += jitter;
    llt.compute(shifted);
    if (llt.info() == Eigen::Success && (llt.matrixLLT().diagonal().array() > 0.0).all()) return llt;
  }
  fail(ErrorKind::NotPositiveDefinite,
       "Cholesky factorization failed for " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " matrix");
}

inline Matrix solve_spd(const Matrix& a, const Matrix& b) {
  if (b.rows() != a.rows()) fail(ErrorKind::DomainError, "solve_spd dimension mismatch");
  return spd_factor(a).solve(b);
}

inline Vector solve_spd(const Matrix& a, const Vector& b) {
  if (b.size() != a.rows()) fail(ErrorKind::DomainError, "solve_spd dimension mismatch");
  return spd_factor(a).solve(b);
}

inline Matrix inverse_spd(const Matrix& a) {
  Matrix inv = spd_factor(a).solve(Matrix::Identity(a.rows(), a.cols()));
  return 0.5 * (inv + inv.transpose());
}

inline double inf_norm(const Matrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().rowwise().sum().maxCoeff();
}

}  // namespace adjwald::numkit
