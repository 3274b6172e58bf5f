#include "mcinv/linalg.hpp"

#include <algorithm>
#include <limits>

#include "mcinv/error.hpp"

namespace mcinv {

namespace {

double truncationThreshold(const Vector& sigma, Eigen::Index rows, Eigen::Index cols,
                           double tol, double scale) {
  const double smax = sigma.size() > 0 ? sigma.maxCoeff() : 0.0;
  return tol * std::max(smax, scale) * static_cast<double>(std::max(rows, cols));
}

}  // namespace

Matrix pseudoInverse(const Matrix& m, double tol, double scale) {
  if (m.size() == 0) return Matrix::Zero(m.cols(), m.rows());
  Eigen::BDCSVD<Matrix> svd(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw InternalError("pseudoInverse: SVD failed");
  const Vector& s = svd.singularValues();
  const double cut = truncationThreshold(s, m.rows(), m.cols(), tol, scale);
  Vector inv = Vector::Zero(s.size());
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cut && s(i) > 0.0) inv(i) = 1.0 / s(i);
  return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

Eigen::Index numericalRank(const Matrix& m, double tol, double scale) {
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(m);
  const Vector& s = svd.singularValues();
  const double cut = truncationThreshold(s, m.rows(), m.cols(), tol, scale);
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i)
    if (s(i) > cut && s(i) > 0.0) ++rank;
  return rank;
}

Matrix symmetricSqrt(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  if (eig.info() != Eigen::Success)
    throw ConstructionFailure("symmetricSqrt: eigendecomposition failed");
  const Vector& lambda = eig.eigenvalues();
  if (lambda.size() > 0 && !(lambda.minCoeff() > 0.0))
    throw ConstructionFailure("symmetricSqrt: matrix is not positive definite");
  const Matrix& v = eig.eigenvectors();
  return v * lambda.cwiseSqrt().asDiagonal() * v.transpose();
}

Matrix spdSolve(const Matrix& a, const Matrix& b) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success)
    throw InternalError("spdSolve: Cholesky factorization failed (matrix not SPD)");
  return llt.solve(b);
}

double relativeDifference(const Matrix& a, const Matrix& b) {
  const double denom = std::max(b.norm(), std::numeric_limits<double>::min());
  return (a - b).norm() / denom;
}

bool allFinite(const Matrix& m) { return m.allFinite(); }

}  // namespace mcinv
