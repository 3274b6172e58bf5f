#pragma once

#include <cmath>

#include "mcinv/linalg.hpp"
#include "mcinv/model.hpp"
#include "mcinv/rng.hpp"

namespace mcinv::testing {

/// Random SPD matrix Q diag(d) Q^T with eigenvalues in [lo, hi].
inline Matrix randomSpd(Rng& rng, Eigen::Index n, double lo = 0.5, double hi = 2.0) {
  Eigen::HouseholderQR<Matrix> qr(rng.normalMatrix(n, n));
  const Matrix q = qr.householderQ();
  Vector d(n);
  for (Eigen::Index i = 0; i < n; ++i) d(i) = rng.uniform(lo, hi);
  Matrix a = q * d.asDiagonal() * q.transpose();
  return 0.5 * (a + a.transpose());
}

/// Plain central differences, independent of the library's implementation.
template <class F>
Vector centralDifference(F&& f, const Vector& x, double h) {
  Vector g(x.size());
  Vector probe = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    probe(i) = x(i) + h;
    const double fp = f(probe);
    probe(i) = x(i) - h;
    const double fm = f(probe);
    probe(i) = x(i);
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline double relNorm(const Matrix& a, const Matrix& b) {
  return (a - b).norm() / std::max(b.norm(), 1e-300);
}

/// Affine least squares with Gamma/Lambda weights via the augmented
/// regressor X = [Y; 1^T]:  H Z X X^T = (Gamma^-1 U + a G^T Lambda^-1 Y) X^T.
/// Requires X X^T invertible (n_t > n, generic data).
inline std::pair<Matrix, Vector> mcdnnNormalEquations(const Matrix& u, const Matrix& y,
                                                      const Matrix& g, const Matrix& gammaInv,
                                                      const Matrix& lambdaInv, double alpha) {
  const Eigen::Index n = y.rows();
  Matrix x(n + 1, y.cols());
  x.topRows(n) = y;
  x.row(n).setOnes();
  const Matrix h = gammaInv + alpha * g.transpose() * lambdaInv * g;
  const Matrix rhs = (gammaInv * u + alpha * g.transpose() * lambdaInv * y) * x.transpose();
  const Matrix z = h.fullPivLu().solve(rhs) * (x * x.transpose()).inverse();
  return {z.leftCols(n), z.col(n)};
}

/// nDNN minimizer row by row from the dense (n+1)x(n+1) normal equations.
inline std::pair<Matrix, Vector> ndnnNormalEquations(const Matrix& u, const Matrix& y, double a1,
                                                     double a2) {
  const Eigen::Index n = y.rows();
  const double nt = static_cast<double>(y.cols());
  Matrix a(n + 1, n + 1);
  a.topLeftCorner(n, n) = y * y.transpose() + a1 * Matrix::Identity(n, n);
  a.topRightCorner(n, 1) = y.rowwise().sum();
  a.bottomLeftCorner(1, n) = y.rowwise().sum().transpose();
  a(n, n) = nt + a2;
  Matrix rhs(n + 1, u.rows());
  rhs.topRows(n) = y * u.transpose();
  rhs.row(n) = u.rowwise().sum().transpose();
  const Matrix sol = a.fullPivLu().solve(rhs);  // column i = [w_i; b_i]
  return {sol.topRows(n).transpose(), sol.row(n).transpose()};
}

}  // namespace mcinv::testing
