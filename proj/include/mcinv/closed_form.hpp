#pragma once

#include <string_view>

#include "mcinv/linalg.hpp"
#include "mcinv/model.hpp"

namespace mcinv {

enum class AffineMethod { NDNN, MCDNN, MCDNNUnweighted };

std::string_view toString(AffineMethod method);

/// Learned affine inverse map y -> W y + b.
struct AffineMap {
  Matrix weight;  // m x n
  Vector bias;    // m
  AffineMethod trainedBy = AffineMethod::NDNN;
};

struct Hyperparameters {
  double alpha1 = 0.0;  // nDNN weight penalty
  double alpha2 = 0.0;  // nDNN bias penalty
  double alpha = 1.0;   // model-misfit weight in mcDNN
  double beta = 1.0;    // model-misfit weight in the autoencoders

  /// Throws InvalidArgument unless every entry is finite and nonnegative.
  void validate() const;
};

/// Closed-form minimizer of the naive objective
///   1/2 ||U - (W Y + b 1^T)||^2 + alpha1/2 ||W||^2 + alpha2/2 ||b||^2.
AffineMap solveNDNNClosedForm(const TrainingSet& ts, double alpha1, double alpha2,
                              double pinvTol = kPinvTolerance);

/// Closed-form minimizer of the forward-map constrained objective
///   1/2 ||U - (W Y + B)||^2_{Gamma^-1} + alpha/2 ||Y - G (W Y + B)||^2_{Lambda^-1}.
AffineMap solveMCDNNClosedForm(const TrainingSet& ts, const ForwardOperator& fwd,
                               const GaussianPrior& prior, const NoiseModel& noise, double alpha,
                               double pinvTol = kPinvTolerance);

/// Same objective with Gamma = I and Lambda = I.
AffineMap solveMCDNNUnweighted(const TrainingSet& ts, const ForwardOperator& fwd, double alpha,
                               double pinvTol = kPinvTolerance);

Vector predict(const AffineMap& map, const Vector& yObs);
/// Applies the map to every column of `yObs`.
Matrix predictColumns(const AffineMap& map, const Matrix& yObs);

/// Data-informed Tikhonov center u0 for which tikhonovSolve(..., u0)
/// reproduces the mcDNN prediction at yObs.
Vector referenceParameter(const TrainingSet& ts, const ForwardOperator& fwd,
                          const GaussianPrior& prior, const NoiseModel& noise, double alpha,
                          const Vector& yObs, double pinvTol = kPinvTolerance);

/// argmin_u 1/2 ||yObs - G u||^2_{Lambda^-1} + 1/(2 alpha) ||u - u0||^2_{Gamma^-1}.
Vector tikhonovSolve(const ForwardOperator& fwd, const NoiseModel& noise,
                     const GaussianPrior& prior, double alpha, const Vector& yObs,
                     const Vector& u0);

/// Column-batched tikhonovSolve sharing one factorization. `u0` is either a
/// single column (shared center) or one column per observation.
Matrix tikhonovSolveColumns(const ForwardOperator& fwd, const NoiseModel& noise,
                            const GaussianPrior& prior, double alpha, const Matrix& yObs,
                            const Matrix& u0);

}  // namespace mcinv
