#pragma once

#include "aobs/matkit/mat.hpp"
#include "aobs/matkit/scaled.hpp"

namespace aobs::matkit {

/// Determinant via LU with partial pivoting. The matrix is pre-scaled to unit
/// magnitude and the pivot product is accumulated in scaled form, so results far
/// outside the double range are exact up to rounding.
ScaledScalar det(const Mat& m);
ScaledScalar det(const ScaledMat& m);

/// Classical adjoint: adj(m)·m = det(m)·I, including singular m. Built from
/// cofactors, never from det·inverse.
Mat adjugate(const Mat& m);
ScaledMat adjugate(const ScaledMat& m);

/// tr(adj(a)·b) without forming the product.
ScaledScalar trace_product_adj(const Mat& a, const Mat& b);
ScaledScalar trace_product_adj(const ScaledMat& a, const ScaledMat& b);

/// Solve a·x = b (b may have several columns). Throws SolverError when singular.
Mat solve(const Mat& a, const Mat& b);

/// Symmetric P with aclᵀP + P·acl = -q. The solve doubles as the Hurwitz test:
/// it throws SolverError if the vectorized system is singular or P is not
/// positive definite.
Mat solve_lyapunov(const Mat& acl, const Mat& q);

/// True iff the Lyapunov probe aclᵀP + P·acl = -I yields a positive-definite P.
bool is_hurwitz(const Mat& acl);

/// Cholesky-based test on the symmetric part.
bool is_positive_definite(const Mat& m);

struct Svd {
  Mat u;      // rows × k
  Vec sigma;  // k = min(rows, cols), descending
  Mat v;      // cols × k
};
/// Thin SVD by one-sided Jacobi rotations.
Svd svd(const Mat& m);

double spectral_norm(const Mat& m);

/// Moore–Penrose pseudo-inverse; the zero matrix maps to the zero transpose.
Mat pinv(const Mat& m);

struct SymmetricEigen {
  Vec values;  // ascending
  Mat vectors; // columns
};
/// Cyclic Jacobi eigen-decomposition of a symmetric matrix (at most `sweeps` sweeps).
SymmetricEigen symmetric_eigen(const Mat& m, int sweeps = 30);

}  // namespace aobs::matkit
