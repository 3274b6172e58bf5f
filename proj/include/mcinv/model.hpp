#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "mcinv/linalg.hpp"

namespace mcinv {

/// Parameter-to-observable map. Linear operators carry the n x m matrix G;
/// a nonlinear map supplies its own evaluator and Jacobian.
class ForwardOperator {
 public:
  using Evaluator = std::function<Vector(const Vector&)>;
  using JacobianFn = std::function<Matrix(const Vector&)>;

  explicit ForwardOperator(Matrix g);

  static ForwardOperator nonlinear(Eigen::Index parameterDim, Eigen::Index observableDim,
                                   Evaluator evaluate, JacobianFn jacobian);

  Eigen::Index parameterDim() const { return m_; }
  Eigen::Index observableDim() const { return n_; }
  bool isLinear() const { return !evaluate_; }

  /// The matrix G. Throws InvalidArgument for a nonlinear operator.
  const Matrix& matrix() const;

  Vector apply(const Vector& u) const;
  /// Applies the map to every column of `u`.
  Matrix applyColumns(const Matrix& u) const;
  Matrix jacobian(const Vector& u) const;
  /// Column j of the result is J(at_j)^T r_j.
  Matrix adjointColumns(const Matrix& at, const Matrix& r) const;

 private:
  ForwardOperator() = default;

  Eigen::Index m_ = 0;
  Eigen::Index n_ = 0;
  Matrix g_;
  Evaluator evaluate_;
  JacobianFn jacobian_;
};

/// Gaussian prior N(mean, Gamma). Stores the covariance, its precision and a
/// symmetric square root used for sampling.
class GaussianPrior {
 public:
  static GaussianPrior fromPrecision(Vector mean, Matrix precision);
  static GaussianPrior fromCovariance(Vector mean, Matrix covariance);
  /// N(mean, I).
  static GaussianPrior identity(Vector mean);

  Eigen::Index dim() const { return mean_.size(); }
  const Vector& mean() const { return mean_; }
  const Matrix& covariance() const { return covariance_; }
  const Matrix& precision() const { return precision_; }
  /// C with C * C^T = Gamma.
  const Matrix& sqrtCovariance() const { return sqrtCov_; }

  /// trace(R^T Gamma^{-1} R).
  double weightedNormSquared(const Matrix& r) const;

 private:
  GaussianPrior(Vector mean, Matrix covariance, Matrix precision);

  Vector mean_;
  Matrix covariance_;
  Matrix precision_;
  Matrix sqrtCov_;
};

enum class NoiseMode {
  MaxAbsolute,  // sigma = fraction * max |G U| over all entries
  PerEntry,     // sigma_ij = fraction * |(G U)_ij|
};

std::string_view toString(NoiseMode mode);
NoiseMode noiseModeFromString(std::string_view s);

struct NoiseSpec {
  double fraction = 0.05;
  NoiseMode mode = NoiseMode::MaxAbsolute;
  /// Relative sigma used for the Lambda weighting when the generated noise is
  /// exactly zero, so that Lambda stays positive definite.
  double weightFloor = 0.01;
};

/// Additive Gaussian noise with covariance Lambda.
class NoiseModel {
 public:
  /// Lambda = sigma^2 I. sigma must be positive.
  static NoiseModel isotropic(Eigen::Index n, double sigma);
  static NoiseModel fromCovariance(Matrix covariance);

  Eigen::Index dim() const { return covariance_.rows(); }
  const Matrix& covariance() const { return covariance_; }
  const Matrix& precision() const { return precision_; }
  /// sigma for the scalar form, empty for a general covariance.
  std::optional<double> sigma() const { return sigma_; }

  /// trace(R^T Lambda^{-1} R).
  double weightedNormSquared(const Matrix& r) const;

 private:
  NoiseModel(Matrix covariance, Matrix precision, std::optional<double> sigma);

  Matrix covariance_;
  Matrix precision_;
  std::optional<double> sigma_;
};

struct CenteredStatistics {
  Vector meanParameter;  // U 1 / n_t
  Vector meanData;       // Y 1 / n_t
  Matrix centeredParameters;
  Matrix centeredData;
  double dataScale = 0.0;  // ||Y||_F, the magnitude centering cancelled against
};

/// Paired training parameters (m x n_t) and data (n x n_t).
class TrainingSet {
 public:
  TrainingSet(Matrix u, Matrix y);

  const Matrix& parameters() const { return u_; }
  const Matrix& data() const { return y_; }
  Eigen::Index count() const { return u_.cols(); }
  Eigen::Index parameterDim() const { return u_.rows(); }
  Eigen::Index dataDim() const { return y_.rows(); }

  /// First `count` columns.
  TrainingSet head(Eigen::Index count) const;

 private:
  Matrix u_;
  Matrix y_;
};

CenteredStatistics centeredStatistics(const TrainingSet& ts);

/// Uniform grid on [0, 1] with `gridSize` points.
Vector unitGrid(Eigen::Index gridSize);

/// Row-normalized Gaussian blur rows centered at the observation grid points.
ForwardOperator buildGaussianBlurOperator(Eigen::Index gridSize, double kernelWidth,
                                          std::span<const Eigen::Index> obsIndices);

/// Sorted, distinct observation indices drawn without replacement.
std::vector<Eigen::Index> drawObservationIndices(Eigen::Index gridSize, Eigen::Index count,
                                                 std::uint64_t seed);

/// p0(t) = 10 (t - 0.5) exp(-50 (t - 0.5)^2) - 0.8 + 1.6 t.
Vector priorMean(const Vector& grid);

enum class PriorKind { Dirichlet, Relaxed };

std::string_view toString(PriorKind kind);
PriorKind priorKindFromString(std::string_view s);

/// Relative lumped-mass shift keeping the FE precision positive definite.
inline constexpr double kMassShift = 1e-8;

/// scale * (K + eps M) on the uniform grid; see buildFEPrior.
Matrix assembleFEPrecision(PriorKind kind, Eigen::Index gridSize, double scale,
                           double boundaryRelaxation);

/// First-order finite-element prior. K is the second-difference stiffness
/// (1/h) tridiag(-1, 2, -1) and M = h I the lumped mass. Dirichlet removes the
/// boundary couplings and pins both boundary diagonals to the interior stencil
/// value 2/h; Relaxed keeps the couplings and adds `boundaryRelaxation` to the
/// two boundary diagonals.
GaussianPrior buildFEPrior(PriorKind kind, Eigen::Index gridSize, double scale,
                           double boundaryRelaxation);

/// `count` i.i.d. draws mean + C z as columns of an m x count matrix.
Matrix samplePrior(const GaussianPrior& prior, Eigen::Index count, std::uint64_t seed);

struct GeneratedData {
  TrainingSet set;
  NoiseModel noise;       // Lambda used for weighting
  double sampleSigma = 0;  // sigma actually used to draw noise (0 when noise-free)
};

/// Y = G U + E with E drawn per `spec`. The returned NoiseModel has
/// Lambda = sigma^2 I, with a floor when the drawn noise is zero.
GeneratedData generateTrainingSet(const ForwardOperator& fwd, const Matrix& u,
                                  const NoiseSpec& spec, std::uint64_t seed);

/// Adds N(0, sigma^2) noise to every entry of `clean`.
Matrix addNoise(const Matrix& clean, double sigma, std::uint64_t seed);

}  // namespace mcinv
