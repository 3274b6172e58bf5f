#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string_view>

#include "mcinv/closed_form.hpp"
#include "mcinv/model.hpp"
#include "mcinv/network.hpp"

namespace mcinv {

/// The five training objectives.
enum class LossKind {
  NDNN,          // 1/2||U - Psi(Y)||^2 + a1/2||W||^2 + a2/2||b||^2
  MCDNN,         // 1/2||U - Psi(Y)||^2_{Gamma^-1} + alpha/2||Y - G(Psi(Y))||^2_{Lambda^-1}
  MCDecoder,     // alpha/2||Y - Pe(U)||^2 + 1/2||U - Pd(Pe(U))||^2 + beta/2||Y - G(Pd(Pe(U)))||^2
  MCDecoderVar,  // 1/2||U - Pd(Pe(U))||^2 + beta/2||Pe(U) - G(Pd(Pe(U)))||^2
  MCEncoder,     // alpha/2||U - Pe(Y)||^2 + 1/2||Y - Pd(Pe(Y))||^2 + beta/2||Y - G(Pe(Y))||^2
};

std::string_view toString(LossKind kind);
LossKind lossKindFromString(std::string_view s);
bool isAutoencoderLoss(LossKind kind);

/// Everything a loss needs besides the trainable parameters.
struct Problem {
  TrainingSet data;
  ForwardOperator forward;
  std::optional<GaussianPrior> prior;  // MCDNN only
  std::optional<NoiseModel> noise;     // MCDNN only
  Hyperparameters hp;
};

double lossNDNN(const DenseNetwork& net, const TrainingSet& ts, double alpha1, double alpha2);
double lossMCDNN(const DenseNetwork& net, const TrainingSet& ts, const ForwardOperator& fwd,
                 const GaussianPrior& prior, const NoiseModel& noise, double alpha);
double lossMCDecoder(const AutoencoderParams& ae, const TrainingSet& ts,
                     const ForwardOperator& fwd, double alpha, double beta);
double lossMCDecoderVar(const AutoencoderParams& ae, const TrainingSet& ts,
                        const ForwardOperator& fwd, double beta);
double lossMCEncoder(const AutoencoderParams& ae, const TrainingSet& ts,
                     const ForwardOperator& fwd, double alpha, double beta);

/// A loss as a function of the flat parameter vector, with its analytic
/// (reverse-mode) gradient. Cheap to copy; evaluation is const and thread-safe
/// as long as the forward operator is.
class Objective {
 public:
  Objective(LossKind kind, Problem problem, DenseNetwork architecture);
  Objective(LossKind kind, Problem problem, AutoencoderParams architecture);

  LossKind kind() const { return kind_; }
  const Problem& problem() const { return *problem_; }
  Eigen::Index dim() const;
  /// Parameters of the architecture passed at construction.
  Vector initialParameters() const;

  /// Loss at theta. May be non-finite; never throws on overflow.
  double value(const Vector& theta) const;
  /// Loss and gradient. Throws NumericError naming the stage where a
  /// non-finite value appeared.
  double valueAndGradient(const Vector& theta, Vector& grad) const;
  Vector gradient(const Vector& theta) const;

  const std::optional<DenseNetwork>& network() const { return net_; }
  const std::optional<AutoencoderParams>& autoencoder() const { return ae_; }

 private:
  double evaluate(const Vector& theta, Vector* grad) const;

  LossKind kind_;
  std::shared_ptr<const Problem> problem_;
  std::optional<DenseNetwork> net_;
  std::optional<AutoencoderParams> ae_;
};

using ScalarField = std::function<double(const Vector&)>;

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h, one coordinate at
/// a time. Serial reference for the OpenMP kernel below.
Vector finiteDifferenceGradient(const ScalarField& f, const Vector& theta, double h = 1e-5);

/// Same result as finiteDifferenceGradient, coordinates spread over OpenMP
/// threads. `f` must be safe to call concurrently.
Vector finiteDifferenceGradientParallel(const ScalarField& f, const Vector& theta,
                                        double h = 1e-5);

Vector finiteDifferenceGradient(const Objective& objective, const Vector& theta,
                                double h = 1e-5, bool parallel = false);

}  // namespace mcinv
