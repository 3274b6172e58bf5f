#include "mcinv/closed_form.hpp"

#include <cmath>
#include <string>

#include "mcinv/error.hpp"

namespace mcinv {

std::string_view toString(AffineMethod method) {
  switch (method) {
    case AffineMethod::NDNN: return "ndnn";
    case AffineMethod::MCDNN: return "mcdnn";
    case AffineMethod::MCDNNUnweighted: return "mcdnn_unweighted";
  }
  return "?";
}

void Hyperparameters::validate() const {
  auto check = [](double v, const char* name) {
    if (!std::isfinite(v) || v < 0.0)
      throw InvalidArgument(std::string("hyperparameter ") + name +
                            " must be finite and nonnegative");
  };
  check(alpha1, "alpha1");
  check(alpha2, "alpha2");
  check(alpha, "alpha");
  check(beta, "beta");
}

namespace {

void requireNonnegative(double v, const char* name) {
  if (!std::isfinite(v) || v < 0.0)
    throw InvalidArgument(std::string(name) + " must be finite and nonnegative");
}

void requireLinearCompatible(const TrainingSet& ts, const ForwardOperator& fwd) {
  if (!fwd.isLinear()) throw InvalidArgument("closed-form solvers need a linear forward map");
  if (fwd.parameterDim() != ts.parameterDim() || fwd.observableDim() != ts.dataDim())
    throw InvalidArgument("forward map shape does not match the training set");
}

// Shared core of the weighted and unweighted model-constrained closed forms.
// gammaInv and lambdaInv are the prior and noise precisions.
AffineMap mcdnnCore(const TrainingSet& ts, const Matrix& g, const Matrix& gammaInv,
                    const Matrix& lambdaInv, double alpha, double pinvTol,
                    AffineMethod tag) {
  const CenteredStatistics s = centeredStatistics(ts);
  const Matrix ybarPinv = pseudoInverse(s.centeredData, pinvTol, s.dataScale);
  const Matrix gtLinv = g.transpose() * lambdaInv;

  const Matrix rhsW =
      gammaInv * (s.centeredParameters * ybarPinv) + alpha * gtLinv * (s.centeredData * ybarPinv);
  const Matrix system = gammaInv + alpha * gtLinv * g;

  Eigen::LLT<Matrix> llt(system);
  if (llt.info() != Eigen::Success)
    throw InternalError("solveMCDNNClosedForm: system matrix is not positive definite");

  AffineMap map;
  map.weight = llt.solve(rhsW);
  const Vector rhsB =
      gammaInv * s.meanParameter + alpha * gtLinv * s.meanData - rhsW * s.meanData;
  map.bias = llt.solve(rhsB);
  map.trainedBy = tag;
  return map;
}

}  // namespace

AffineMap solveNDNNClosedForm(const TrainingSet& ts, double alpha1, double alpha2,
                              double pinvTol) {
  requireNonnegative(alpha1, "alpha1");
  requireNonnegative(alpha2, "alpha2");
  const auto& u = ts.parameters();
  const auto& y = ts.data();
  const double nt = static_cast<double>(ts.count());

  // U (I - 1 1^T / (nt + alpha2)) Y^T without forming the nt x nt matrix.
  const Vector su = u.rowwise().sum();
  const Vector sy = y.rowwise().sum();
  const double c = 1.0 / (nt + alpha2);
  const Matrix cross = u * y.transpose() - c * su * sy.transpose();
  Matrix gram = y * y.transpose() - c * sy * sy.transpose();
  gram.diagonal().array() += alpha1;

  AffineMap map;
  map.weight = cross * pseudoInverse(gram, pinvTol, y.squaredNorm());
  const Vector ubar = su / nt;
  const Vector ybar = sy / nt;
  map.bias = (ubar - map.weight * ybar) / (1.0 + alpha2 / nt);
  map.trainedBy = AffineMethod::NDNN;
  return map;
}

AffineMap solveMCDNNClosedForm(const TrainingSet& ts, const ForwardOperator& fwd,
                               const GaussianPrior& prior, const NoiseModel& noise, double alpha,
                               double pinvTol) {
  requireNonnegative(alpha, "alpha");
  requireLinearCompatible(ts, fwd);
  if (prior.dim() != ts.parameterDim() || noise.dim() != ts.dataDim())
    throw InvalidArgument("solveMCDNNClosedForm: prior/noise dimensions do not match");
  return mcdnnCore(ts, fwd.matrix(), prior.precision(), noise.precision(), alpha, pinvTol,
                   AffineMethod::MCDNN);
}

AffineMap solveMCDNNUnweighted(const TrainingSet& ts, const ForwardOperator& fwd, double alpha,
                               double pinvTol) {
  requireNonnegative(alpha, "alpha");
  requireLinearCompatible(ts, fwd);
  const Eigen::Index m = ts.parameterDim();
  const Eigen::Index n = ts.dataDim();
  return mcdnnCore(ts, fwd.matrix(), Matrix::Identity(m, m), Matrix::Identity(n, n), alpha,
                   pinvTol, AffineMethod::MCDNNUnweighted);
}

Vector predict(const AffineMap& map, const Vector& yObs) {
  if (yObs.size() != map.weight.cols())
    throw InvalidArgument("predict: expected data of length " +
                          std::to_string(map.weight.cols()) + ", got " +
                          std::to_string(yObs.size()));
  return map.weight * yObs + map.bias;
}

Matrix predictColumns(const AffineMap& map, const Matrix& yObs) {
  if (yObs.rows() != map.weight.cols())
    throw InvalidArgument("predictColumns: data dimension mismatch");
  Matrix out = map.weight * yObs;
  out.colwise() += map.bias;
  return out;
}

Vector referenceParameter(const TrainingSet& ts, const ForwardOperator& fwd,
                          const GaussianPrior& prior, const NoiseModel& noise, double alpha,
                          const Vector& yObs, double pinvTol) {
  requireNonnegative(alpha, "alpha");
  requireLinearCompatible(ts, fwd);
  if (yObs.size() != ts.dataDim())
    throw InvalidArgument("referenceParameter: observation has wrong length");
  const CenteredStatistics s = centeredStatistics(ts);
  const Matrix ybarPinv = pseudoInverse(s.centeredData, pinvTol, s.dataScale);
  const Vector d = yObs - s.meanData;
  const Vector regression = s.centeredParameters * (ybarPinv * d);
  const Vector outOfRange = d - s.centeredData * (ybarPinv * d);
  const Vector correction =
      prior.covariance() * (fwd.matrix().transpose() * (noise.precision() * outOfRange));
  return s.meanParameter + regression - alpha * correction;
}

Matrix tikhonovSolveColumns(const ForwardOperator& fwd, const NoiseModel& noise,
                            const GaussianPrior& prior, double alpha, const Matrix& yObs,
                            const Matrix& u0) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw InvalidArgument("tikhonovSolve: alpha must be positive");
  if (!fwd.isLinear()) throw InvalidArgument("tikhonovSolve: needs a linear forward map");
  const Matrix& g = fwd.matrix();
  if (yObs.rows() != g.rows() || u0.rows() != g.cols())
    throw InvalidArgument("tikhonovSolve: dimension mismatch");
  if (u0.cols() != 1 && u0.cols() != yObs.cols())
    throw InvalidArgument("tikhonovSolve: u0 must have one column or one per observation");
  if (prior.dim() != g.cols() || noise.dim() != g.rows())
    throw InvalidArgument("tikhonovSolve: prior/noise dimensions do not match");

  const Matrix gtLinv = g.transpose() * noise.precision();
  const Matrix system = gtLinv * g + prior.precision() / alpha;
  Matrix rhs = gtLinv * yObs;
  const Matrix centerTerm = prior.precision() * u0 / alpha;
  if (u0.cols() == 1)
    rhs.colwise() += centerTerm.col(0);
  else
    rhs += centerTerm;
  return spdSolve(system, rhs);
}

Vector tikhonovSolve(const ForwardOperator& fwd, const NoiseModel& noise,
                     const GaussianPrior& prior, double alpha, const Vector& yObs,
                     const Vector& u0) {
  if (yObs.size() != fwd.observableDim() || u0.size() != fwd.parameterDim())
    throw InvalidArgument("tikhonovSolve: dimension mismatch");
  return tikhonovSolveColumns(fwd, noise, prior, alpha, yObs, u0);
}

}  // namespace mcinv
