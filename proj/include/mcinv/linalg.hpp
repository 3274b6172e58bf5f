#pragma once

#include <Eigen/Dense>

namespace mcinv {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Default relative truncation for the Moore-Penrose pseudo-inverse.
inline constexpr double kPinvTolerance = 1e-12;

/// Moore-Penrose pseudo-inverse through an SVD. Singular values at or below
/// tol * max(sigma_max, scale) * max(rows, cols) are treated as zero; `scale`
/// lets a matrix obtained by cancellation (e.g. centered data) be judged
/// against the magnitude of its inputs.
Matrix pseudoInverse(const Matrix& m, double tol = kPinvTolerance, double scale = 0.0);

/// Numerical rank under the same truncation rule as pseudoInverse.
Eigen::Index numericalRank(const Matrix& m, double tol = kPinvTolerance, double scale = 0.0);

/// Symmetric square root C of an SPD matrix (C * C^T = A) from its
/// eigendecomposition. Throws ConstructionFailure if A is not positive definite.
Matrix symmetricSqrt(const Matrix& a);

/// Solve A X = B for symmetric positive-definite A via Cholesky.
/// Throws InternalError if the factorization fails.
Matrix spdSolve(const Matrix& a, const Matrix& b);

/// Frobenius-norm relative difference ||a - b|| / max(||b||, tiny).
double relativeDifference(const Matrix& a, const Matrix& b);

bool allFinite(const Matrix& m);

}  // namespace mcinv
