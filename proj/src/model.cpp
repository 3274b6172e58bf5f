#include "mcinv/model.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <unordered_set>

#include "mcinv/error.hpp"
#include "mcinv/rng.hpp"

namespace mcinv {

// ---------------------------------------------------------------------------
// ForwardOperator

ForwardOperator::ForwardOperator(Matrix g) : m_(g.cols()), n_(g.rows()), g_(std::move(g)) {
  if (m_ < 1 || n_ < 1) throw InvalidArgument("ForwardOperator: matrix must be at least 1x1");
}

ForwardOperator ForwardOperator::nonlinear(Eigen::Index parameterDim,
                                           Eigen::Index observableDim, Evaluator evaluate,
                                           JacobianFn jacobian) {
  if (parameterDim < 1 || observableDim < 1)
    throw InvalidArgument("ForwardOperator: dimensions must be positive");
  if (!evaluate || !jacobian)
    throw InvalidArgument("ForwardOperator: nonlinear map needs evaluator and Jacobian");
  ForwardOperator op;
  op.m_ = parameterDim;
  op.n_ = observableDim;
  op.evaluate_ = std::move(evaluate);
  op.jacobian_ = std::move(jacobian);
  return op;
}

const Matrix& ForwardOperator::matrix() const {
  if (!isLinear()) throw InvalidArgument("ForwardOperator: nonlinear map has no matrix");
  return g_;
}

Vector ForwardOperator::apply(const Vector& u) const {
  if (u.size() != m_)
    throw InvalidArgument("ForwardOperator::apply: expected length " + std::to_string(m_) +
                          ", got " + std::to_string(u.size()));
  if (isLinear()) return g_ * u;
  Vector y = evaluate_(u);
  if (y.size() != n_) throw InvalidArgument("ForwardOperator: evaluator returned wrong length");
  return y;
}

Matrix ForwardOperator::applyColumns(const Matrix& u) const {
  if (u.rows() != m_)
    throw InvalidArgument("ForwardOperator::applyColumns: expected " + std::to_string(m_) +
                          " rows, got " + std::to_string(u.rows()));
  if (isLinear()) return g_ * u;
  Matrix out(n_, u.cols());
  for (Eigen::Index j = 0; j < u.cols(); ++j) out.col(j) = apply(u.col(j));
  return out;
}

Matrix ForwardOperator::jacobian(const Vector& u) const {
  if (isLinear()) return g_;
  Matrix j = jacobian_(u);
  if (j.rows() != n_ || j.cols() != m_)
    throw InvalidArgument("ForwardOperator: Jacobian has wrong shape");
  return j;
}

Matrix ForwardOperator::adjointColumns(const Matrix& at, const Matrix& r) const {
  if (r.rows() != n_) throw InvalidArgument("ForwardOperator::adjointColumns: bad residual");
  if (isLinear()) return g_.transpose() * r;
  Matrix out(m_, r.cols());
  for (Eigen::Index j = 0; j < r.cols(); ++j)
    out.col(j) = jacobian(at.col(j)).transpose() * r.col(j);
  return out;
}

// ---------------------------------------------------------------------------
// GaussianPrior

namespace {

void requireSymmetric(const Matrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() < 1)
    throw InvalidArgument(std::string(what) + ": matrix must be square and nonempty");
  if (!a.allFinite()) throw ConstructionFailure(std::string(what) + ": non-finite entries");
  const double scale = std::max(a.norm(), 1.0);
  if ((a - a.transpose()).norm() > 1e-12 * scale)
    throw ConstructionFailure(std::string(what) + ": matrix is not symmetric");
}

Matrix spdInverse(const Matrix& a, const char* what) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success)
    throw ConstructionFailure(std::string(what) + ": matrix is not positive definite");
  Matrix inv = llt.solve(Matrix::Identity(a.rows(), a.cols()));
  return 0.5 * (inv + inv.transpose());
}

}  // namespace

GaussianPrior::GaussianPrior(Vector mean, Matrix covariance, Matrix precision)
    : mean_(std::move(mean)),
      covariance_(std::move(covariance)),
      precision_(std::move(precision)),
      sqrtCov_(symmetricSqrt(covariance_)) {
  if (mean_.size() != covariance_.rows())
    throw InvalidArgument("GaussianPrior: mean and covariance sizes differ");
}

GaussianPrior GaussianPrior::fromPrecision(Vector mean, Matrix precision) {
  requireSymmetric(precision, "GaussianPrior precision");
  Matrix sym = 0.5 * (precision + precision.transpose());
  Matrix cov = spdInverse(sym, "GaussianPrior precision");
  return GaussianPrior(std::move(mean), std::move(cov), std::move(sym));
}

GaussianPrior GaussianPrior::fromCovariance(Vector mean, Matrix covariance) {
  requireSymmetric(covariance, "GaussianPrior covariance");
  Matrix sym = 0.5 * (covariance + covariance.transpose());
  Matrix prec = spdInverse(sym, "GaussianPrior covariance");
  return GaussianPrior(std::move(mean), std::move(sym), std::move(prec));
}

GaussianPrior GaussianPrior::identity(Vector mean) {
  const Eigen::Index m = mean.size();
  return GaussianPrior(std::move(mean), Matrix::Identity(m, m), Matrix::Identity(m, m));
}

double GaussianPrior::weightedNormSquared(const Matrix& r) const {
  return (r.transpose() * precision_ * r).trace();
}

// ---------------------------------------------------------------------------
// Noise

std::string_view toString(NoiseMode mode) {
  switch (mode) {
    case NoiseMode::MaxAbsolute: return "max-absolute";
    case NoiseMode::PerEntry: return "per-entry";
  }
  return "?";
}

NoiseMode noiseModeFromString(std::string_view s) {
  if (s == "max-absolute") return NoiseMode::MaxAbsolute;
  if (s == "per-entry") return NoiseMode::PerEntry;
  throw InvalidArgument("unknown noise mode '" + std::string(s) + "'");
}

NoiseModel::NoiseModel(Matrix covariance, Matrix precision, std::optional<double> sigma)
    : covariance_(std::move(covariance)), precision_(std::move(precision)), sigma_(sigma) {}

NoiseModel NoiseModel::isotropic(Eigen::Index n, double sigma) {
  if (n < 1) throw InvalidArgument("NoiseModel: dimension must be positive");
  if (!(sigma > 0.0) || !std::isfinite(sigma))
    throw InvalidArgument("NoiseModel: sigma must be positive and finite");
  const double var = sigma * sigma;
  return NoiseModel(var * Matrix::Identity(n, n), (1.0 / var) * Matrix::Identity(n, n), sigma);
}

NoiseModel NoiseModel::fromCovariance(Matrix covariance) {
  requireSymmetric(covariance, "NoiseModel covariance");
  Matrix sym = 0.5 * (covariance + covariance.transpose());
  Matrix prec = spdInverse(sym, "NoiseModel covariance");
  return NoiseModel(std::move(sym), std::move(prec), std::nullopt);
}

double NoiseModel::weightedNormSquared(const Matrix& r) const {
  return (r.transpose() * precision_ * r).trace();
}

// ---------------------------------------------------------------------------
// Training data

TrainingSet::TrainingSet(Matrix u, Matrix y) : u_(std::move(u)), y_(std::move(y)) {
  if (u_.cols() != y_.cols())
    throw InvalidArgument("TrainingSet: U has " + std::to_string(u_.cols()) +
                          " columns but Y has " + std::to_string(y_.cols()));
  if (u_.cols() < 1) throw InvalidArgument("TrainingSet: need at least one sample");
  if (u_.rows() < 1 || y_.rows() < 1) throw InvalidArgument("TrainingSet: empty dimension");
}

TrainingSet TrainingSet::head(Eigen::Index count) const {
  if (count < 1 || count > this->count())
    throw InvalidArgument("TrainingSet::head: count out of range");
  return TrainingSet(u_.leftCols(count), y_.leftCols(count));
}

CenteredStatistics centeredStatistics(const TrainingSet& ts) {
  const auto& u = ts.parameters();
  const auto& y = ts.data();
  const double nt = static_cast<double>(ts.count());
  CenteredStatistics s;
  s.meanParameter = u.rowwise().sum() / nt;
  s.meanData = y.rowwise().sum() / nt;
  s.centeredParameters = u.colwise() - s.meanParameter;
  s.centeredData = y.colwise() - s.meanData;
  s.dataScale = y.norm();
  return s;
}

// ---------------------------------------------------------------------------
// Deconvolution problem pieces

Vector unitGrid(Eigen::Index gridSize) {
  if (gridSize < 2) throw InvalidArgument("unitGrid: need at least 2 points");
  Vector t(gridSize);
  const double h = 1.0 / static_cast<double>(gridSize - 1);
  for (Eigen::Index i = 0; i < gridSize; ++i) t(i) = static_cast<double>(i) * h;
  t(gridSize - 1) = 1.0;
  return t;
}

ForwardOperator buildGaussianBlurOperator(Eigen::Index gridSize, double kernelWidth,
                                          std::span<const Eigen::Index> obsIndices) {
  if (gridSize < 2) throw InvalidArgument("buildGaussianBlurOperator: gridSize must be >= 2");
  if (!(kernelWidth > 0.0) || !std::isfinite(kernelWidth))
    throw InvalidArgument("buildGaussianBlurOperator: kernel width must be positive");
  const auto nObs = static_cast<Eigen::Index>(obsIndices.size());
  if (nObs < 1 || nObs > gridSize)
    throw InvalidArgument("buildGaussianBlurOperator: need 1..gridSize observation indices");
  std::unordered_set<Eigen::Index> seen;
  for (Eigen::Index idx : obsIndices) {
    if (idx < 0 || idx >= gridSize)
      throw InvalidArgument("buildGaussianBlurOperator: index " + std::to_string(idx) +
                            " out of range");
    if (!seen.insert(idx).second)
      throw InvalidArgument("buildGaussianBlurOperator: duplicate index " + std::to_string(idx));
  }

  const Vector t = unitGrid(gridSize);
  const double inv2w2 = 1.0 / (2.0 * kernelWidth * kernelWidth);
  Matrix g(nObs, gridSize);
  for (Eigen::Index i = 0; i < nObs; ++i) {
    const double c = t(obsIndices[static_cast<std::size_t>(i)]);
    for (Eigen::Index j = 0; j < gridSize; ++j) {
      const double d = t(j) - c;
      g(i, j) = std::exp(-d * d * inv2w2);
    }
    g.row(i) /= g.row(i).sum();
  }
  return ForwardOperator(std::move(g));
}

std::vector<Eigen::Index> drawObservationIndices(Eigen::Index gridSize, Eigen::Index count,
                                                 std::uint64_t seed) {
  if (count < 1 || count > gridSize)
    throw InvalidArgument("drawObservationIndices: count must be in [1, gridSize]");
  std::vector<Eigen::Index> all(static_cast<std::size_t>(gridSize));
  std::iota(all.begin(), all.end(), Eigen::Index{0});
  Rng rng(seed);
  std::shuffle(all.begin(), all.end(), rng.engine());
  all.resize(static_cast<std::size_t>(count));
  std::sort(all.begin(), all.end());
  return all;
}

Vector priorMean(const Vector& grid) {
  Vector p(grid.size());
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double s = grid(i) - 0.5;
    p(i) = 10.0 * s * std::exp(-50.0 * s * s) - 0.8 + 1.6 * grid(i);
  }
  return p;
}

std::string_view toString(PriorKind kind) {
  switch (kind) {
    case PriorKind::Dirichlet: return "dirichlet";
    case PriorKind::Relaxed: return "relaxed";
  }
  return "?";
}

PriorKind priorKindFromString(std::string_view s) {
  if (s == "dirichlet") return PriorKind::Dirichlet;
  if (s == "relaxed") return PriorKind::Relaxed;
  throw InvalidArgument("unknown prior kind '" + std::string(s) + "'");
}

Matrix assembleFEPrecision(PriorKind kind, Eigen::Index gridSize, double scale,
                           double boundaryRelaxation) {
  if (gridSize < 3) throw InvalidArgument("buildFEPrior: gridSize must be >= 3");
  if (!(scale > 0.0) || !std::isfinite(scale))
    throw InvalidArgument("buildFEPrior: scale must be positive");
  if (!(boundaryRelaxation >= 0.0) || !std::isfinite(boundaryRelaxation))
    throw InvalidArgument("buildFEPrior: boundary relaxation must be nonnegative");

  const Eigen::Index n = gridSize;
  const double h = 1.0 / static_cast<double>(n - 1);
  const double diag = 2.0 / h;
  const double off = -1.0 / h;
  const double mass = kMassShift * h;

  Matrix k = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = diag;
    if (i + 1 < n) {
      k(i, i + 1) = off;
      k(i + 1, i) = off;
    }
  }
  if (kind == PriorKind::Dirichlet) {
    // Eliminate the boundary unknowns, then re-embed them decoupled.
    for (Eigen::Index b : {Eigen::Index{0}, n - 1}) {
      k.row(b).setZero();
      k.col(b).setZero();
      k(b, b) = diag;
    }
  } else {
    k(0, 0) += boundaryRelaxation;
    k(n - 1, n - 1) += boundaryRelaxation;
  }
  k.diagonal().array() += mass;
  return scale * k;
}

GaussianPrior buildFEPrior(PriorKind kind, Eigen::Index gridSize, double scale,
                           double boundaryRelaxation) {
  Matrix precision = assembleFEPrecision(kind, gridSize, scale, boundaryRelaxation);
  return GaussianPrior::fromPrecision(priorMean(unitGrid(gridSize)), std::move(precision));
}

Matrix samplePrior(const GaussianPrior& prior, Eigen::Index count, std::uint64_t seed) {
  if (count < 1) throw InvalidArgument("samplePrior: count must be >= 1");
  Rng rng(seed);
  const Matrix z = rng.normalMatrix(prior.dim(), count);
  Matrix u = prior.sqrtCovariance() * z;
  u.colwise() += prior.mean();
  return u;
}

Matrix addNoise(const Matrix& clean, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw InvalidArgument("addNoise: sigma must be nonnegative");
  if (sigma == 0.0) return clean;
  Rng rng(seed);
  return clean + sigma * rng.normalMatrix(clean.rows(), clean.cols());
}

GeneratedData generateTrainingSet(const ForwardOperator& fwd, const Matrix& u,
                                  const NoiseSpec& spec, std::uint64_t seed) {
  if (u.rows() != fwd.parameterDim())
    throw InvalidArgument("generateTrainingSet: U has " + std::to_string(u.rows()) +
                          " rows but the forward map expects " +
                          std::to_string(fwd.parameterDim()));
  if (!(spec.fraction >= 0.0) || !std::isfinite(spec.fraction))
    throw InvalidArgument("generateTrainingSet: noise fraction must be nonnegative");

  const Matrix clean = fwd.applyColumns(u);
  const double maxAbs = clean.size() > 0 ? clean.cwiseAbs().maxCoeff() : 0.0;
  Matrix y;
  double sampleSigma = 0.0;
  double weightSigma = 0.0;
  if (spec.mode == NoiseMode::MaxAbsolute) {
    sampleSigma = spec.fraction * maxAbs;
    y = addNoise(clean, sampleSigma, seed);
    weightSigma = sampleSigma;
  } else {
    y = clean;
    if (spec.fraction > 0.0) {
      Rng rng(seed);
      const Matrix z = rng.normalMatrix(clean.rows(), clean.cols());
      y += spec.fraction * clean.cwiseAbs().cwiseProduct(z);
    }
    const double rms = clean.norm() / std::sqrt(static_cast<double>(clean.size()));
    sampleSigma = spec.fraction * rms;
    weightSigma = sampleSigma;
  }
  if (!(weightSigma > 0.0)) weightSigma = spec.weightFloor * maxAbs;
  if (!(weightSigma > 0.0)) weightSigma = spec.weightFloor > 0.0 ? spec.weightFloor : 1.0;

  return GeneratedData{TrainingSet(u, std::move(y)),
                       NoiseModel::isotropic(fwd.observableDim(), weightSigma), sampleSigma};
}

}  // namespace mcinv
