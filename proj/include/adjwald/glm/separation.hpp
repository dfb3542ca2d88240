#pragma once

// Detection of (quasi-)separation in binomial-response models. The ML
// estimate is infinite exactly when the cone
//   C = { g : s_i x_i' g >= 0 for all i, with equality for rows that
//             carry both successes and failures }
// (s_i = +1 for all-success rows, -1 for all-failure rows) contains a
// non-zero direction. Coefficient j diverges when some g in C has g_j != 0.
// Each question is a bounded linear program solved by a dense simplex with
// Bland's rule.

#include <cmath>
#include <string>
#include <vector>

#include "adjwald/error.hpp"
#include "adjwald/numkit/linalg.hpp"

namespace adjwald::glm {

using numkit::Index;
using numkit::Matrix;
using numkit::Vector;

struct LpResult {
  double value = 0.0;
  Vector x;
  int pivots = 0;
};

/// max c'x subject to A x <= b, x >= 0, with b >= 0 so the origin is feasible.
/// The feasible set must be bounded.
inline LpResult simplex_max(const Matrix& A, const Vector& b, const Vector& c, int max_pivots = 5000,
                            double eps = 1e-12) {
  const Index m = A.rows(), n = A.cols();
  if (b.size() != m || c.size() != n) fail(ErrorKind::DomainError, "simplex_max dimension mismatch");
  if ((b.array() < 0.0).any()) fail(ErrorKind::DomainError, "simplex_max requires b >= 0");
  Matrix t = Matrix::Zero(m + 1, n + m + 1);
  t.topLeftCorner(m, n) = A;
  t.block(0, n, m, m).setIdentity();
  t.topRightCorner(m, 1) = b;
  t.bottomLeftCorner(1, n) = -c.transpose();
  std::vector<Index> basis(static_cast<std::size_t>(m));
  for (Index i = 0; i < m; ++i) basis[static_cast<std::size_t>(i)] = n + i;

  LpResult out;
  for (;;) {
    Index enter = -1;
    for (Index j = 0; j < n + m; ++j) {
      if (t(m, j) < -eps) {
        enter = j;
        break;
      }
    }
    if (enter < 0) break;
    Index leave = -1;
    double best = 0.0;
    for (Index i = 0; i < m; ++i) {
      if (t(i, enter) > eps) {
        const double ratio = t(i, n + m) / t(i, enter);
        if (leave < 0 || ratio < best - eps ||
            (ratio <= best + eps && basis[static_cast<std::size_t>(i)] < basis[static_cast<std::size_t>(leave)])) {
          leave = i;
          best = ratio;
        }
      }
    }
    if (leave < 0) fail(ErrorKind::DomainError, "linear program is unbounded");
    if (++out.pivots > max_pivots) fail(ErrorKind::LpCycleLimit, "simplex exceeded " + std::to_string(max_pivots) + " pivots");
    t.row(leave) /= t(leave, enter);
    for (Index i = 0; i <= m; ++i)
      if (i != leave && t(i, enter) != 0.0) t.row(i) -= t(i, enter) * t.row(leave);
    basis[static_cast<std::size_t>(leave)] = enter;
  }
  out.x = Vector::Zero(n);
  for (Index i = 0; i < m; ++i)
    if (basis[static_cast<std::size_t>(i)] < n) out.x(basis[static_cast<std::size_t>(i)]) = t(i, n + m);
  out.value = t(m, n + m);
  return out;
}

enum class SeparationKind { None, Partial, Complete };

inline const char* to_string(SeparationKind k) {
  switch (k) {
    case SeparationKind::None: return "none";
    case SeparationKind::Partial: return "partial";
    case SeparationKind::Complete: return "complete";
  }
  return "?";
}

struct SeparationResult {
  SeparationKind kind = SeparationKind::None;
  std::vector<bool> divergent;  // per coefficient
  // The LP hit its pivot limit and the divergence heuristic was used.
  bool heuristic = false;

  bool any() const { return kind != SeparationKind::None; }
};

/// y holds observed proportions and m the binomial totals.
inline SeparationResult detect_separation(const Matrix& X, const Vector& y, const Vector& m, double tol = 1e-8) {
  const Index n = X.rows(), k = X.cols();
  std::vector<Vector> rows;
  bool mixed = false;
  std::vector<Vector> strict_rows;
  for (Index i = 0; i < n; ++i) {
    if (!(m(i) > 0.0)) continue;
    Vector xi = X.row(i).transpose();
    const double scale = xi.cwiseAbs().maxCoeff();
    if (scale == 0.0) continue;
    xi /= scale;
    if (y(i) >= 1.0) {
      rows.push_back(xi);
      strict_rows.push_back(xi);
    } else if (y(i) <= 0.0) {
      rows.push_back(-xi);
      strict_rows.push_back(-xi);
    } else {
      rows.push_back(xi);
      rows.push_back(-xi);
      mixed = true;
    }
  }

  // Variables (g+, g-) in [0, 1]^k each; cone rows -s x' (g+ - g-) <= 0.
  const Index r = static_cast<Index>(rows.size());
  Matrix A = Matrix::Zero(r + 2 * k, 2 * k);
  for (Index i = 0; i < r; ++i) {
    A.block(i, 0, 1, k) = -rows[static_cast<std::size_t>(i)].transpose();
    A.block(i, k, 1, k) = rows[static_cast<std::size_t>(i)].transpose();
  }
  A.bottomRows(2 * k).setIdentity();
  Vector b = Vector::Zero(r + 2 * k);
  b.tail(2 * k).setOnes();

  SeparationResult out;
  out.divergent.assign(static_cast<std::size_t>(k), false);
  bool any = false;
  for (Index j = 0; j < k; ++j) {
    for (double sign : {1.0, -1.0}) {
      Vector c = Vector::Zero(2 * k);
      c(j) = sign;
      c(k + j) = -sign;
      if (simplex_max(A, b, c).value > tol) {
        out.divergent[static_cast<std::size_t>(j)] = true;
        any = true;
        break;
      }
    }
  }
  if (!any) return out;

  out.kind = SeparationKind::Partial;
  if (!mixed && !strict_rows.empty()) {
    const Index s = static_cast<Index>(strict_rows.size());
    Matrix B = Matrix::Zero(s + 2 * k + 1, 2 * k + 1);
    for (Index i = 0; i < s; ++i) {
      B.block(i, 0, 1, k) = -strict_rows[static_cast<std::size_t>(i)].transpose();
      B.block(i, k, 1, k) = strict_rows[static_cast<std::size_t>(i)].transpose();
      B(i, 2 * k) = 1.0;
    }
    B.block(s, 0, 2 * k + 1, 2 * k + 1).setIdentity();
    Vector bb = Vector::Zero(s + 2 * k + 1);
    bb.tail(2 * k + 1).setOnes();
    Vector c = Vector::Zero(2 * k + 1);
    c(2 * k) = 1.0;
    if (simplex_max(B, bb, c).value > tol) out.kind = SeparationKind::Complete;
  }
  return out;
}

}  // namespace adjwald::glm
