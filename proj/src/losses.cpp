#include "mcinv/losses.hpp"

#include <cmath>
#include <span>
#include <string>

#include "mcinv/error.hpp"

namespace mcinv {

std::string_view toString(LossKind kind) {
  switch (kind) {
    case LossKind::NDNN: return "ndnn";
    case LossKind::MCDNN: return "mcdnn";
    case LossKind::MCDecoder: return "mcdecoder";
    case LossKind::MCDecoderVar: return "mcdecodervar";
    case LossKind::MCEncoder: return "mcencoder";
  }
  return "?";
}

LossKind lossKindFromString(std::string_view s) {
  if (s == "ndnn") return LossKind::NDNN;
  if (s == "mcdnn") return LossKind::MCDNN;
  if (s == "mcdecoder") return LossKind::MCDecoder;
  if (s == "mcdecodervar") return LossKind::MCDecoderVar;
  if (s == "mcencoder") return LossKind::MCEncoder;
  throw InvalidArgument("unknown loss kind '" + std::string(s) + "'");
}

bool isAutoencoderLoss(LossKind kind) {
  return kind == LossKind::MCDecoder || kind == LossKind::MCDecoderVar ||
         kind == LossKind::MCEncoder;
}

namespace {

void checkFinite(const Matrix& m, LossKind kind, const char* where) {
  if (!m.allFinite())
    throw NumericError("non-finite value in " + std::string(where) + " of the " +
                       std::string(toString(kind)) + " loss");
}

void requireShape(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want)
    throw InvalidArgument(std::string(what) + ": expected dimension " + std::to_string(want) +
                          ", got " + std::to_string(got));
}

// Each *Impl evaluates the loss; when `grad` is non-empty it also writes the
// gradient with respect to the flattened parameters.

double ndnnImpl(const DenseNetwork& net, const TrainingSet& ts, double a1, double a2,
                std::span<double> grad) {
  requireShape(net.inputDim(), ts.dataDim(), "ndnn network input");
  requireShape(net.outputDim(), ts.parameterDim(), "ndnn network output");
  const bool wantGrad = !grad.empty();
  ForwardTape tape;
  const Matrix out = wantGrad ? net.forward(ts.data(), tape) : net.forward(ts.data());
  const Matrix r = ts.parameters() - out;
  const double loss =
      0.5 * r.squaredNorm() + 0.5 * a1 * net.weightNormSquared() + 0.5 * a2 * net.biasNormSquared();
  if (!wantGrad) return loss;

  checkFinite(out, LossKind::NDNN, "network output");
  net.backward(tape, -r, grad);
  std::size_t k = 0;
  for (const auto& layer : net.layers()) {
    for (Eigen::Index i = 0; i < layer.weight.size(); ++i) grad[k++] += a1 * layer.weight.data()[i];
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) grad[k++] += a2 * layer.bias(i);
  }
  return loss;
}

double mcdnnImpl(const DenseNetwork& net, const TrainingSet& ts, const ForwardOperator& fwd,
                 const Matrix& gammaInv, const Matrix& lambdaInv, double alpha,
                 std::span<double> grad) {
  requireShape(net.inputDim(), ts.dataDim(), "mcdnn network input");
  requireShape(net.outputDim(), ts.parameterDim(), "mcdnn network output");
  requireShape(fwd.parameterDim(), ts.parameterDim(), "forward map input");
  requireShape(fwd.observableDim(), ts.dataDim(), "forward map output");
  requireShape(gammaInv.rows(), ts.parameterDim(), "prior");
  requireShape(lambdaInv.rows(), ts.dataDim(), "noise");
  const bool wantGrad = !grad.empty();
  ForwardTape tape;
  const Matrix out = wantGrad ? net.forward(ts.data(), tape) : net.forward(ts.data());
  const Matrix r = ts.parameters() - out;
  const Matrix s = ts.data() - fwd.applyColumns(out);
  const Matrix gr = gammaInv * r;
  const Matrix ls = lambdaInv * s;
  const double loss = 0.5 * r.cwiseProduct(gr).sum() + 0.5 * alpha * s.cwiseProduct(ls).sum();
  if (!wantGrad) return loss;

  checkFinite(out, LossKind::MCDNN, "network output");
  checkFinite(s, LossKind::MCDNN, "model residual");
  const Matrix dOut = -gr - alpha * fwd.adjointColumns(out, ls);
  net.backward(tape, dOut, grad);
  return loss;
}

void requireDecoderOrientation(const AutoencoderParams& ae, const TrainingSet& ts,
                               const ForwardOperator& fwd) {
  requireShape(ae.encoder.inputDim(), ts.parameterDim(), "encoder input (parameter)");
  requireShape(ae.encoder.outputDim(), ts.dataDim(), "encoder output (data)");
  requireShape(ae.decoder.outputDim(), ts.parameterDim(), "decoder output (parameter)");
  requireShape(fwd.parameterDim(), ts.parameterDim(), "forward map input");
  requireShape(fwd.observableDim(), ts.dataDim(), "forward map output");
}

void requireEncoderOrientation(const AutoencoderParams& ae, const TrainingSet& ts,
                               const ForwardOperator& fwd) {
  requireShape(ae.encoder.inputDim(), ts.dataDim(), "encoder input (data)");
  requireShape(ae.encoder.outputDim(), ts.parameterDim(), "encoder output (parameter)");
  requireShape(ae.decoder.outputDim(), ts.dataDim(), "decoder output (data)");
  requireShape(fwd.parameterDim(), ts.parameterDim(), "forward map input");
  requireShape(fwd.observableDim(), ts.dataDim(), "forward map output");
}

std::span<double> encoderPart(const AutoencoderParams& ae, std::span<double> grad) {
  return grad.subspan(0, static_cast<std::size_t>(ae.encoder.parameterCount()));
}
std::span<double> decoderPart(const AutoencoderParams& ae, std::span<double> grad) {
  return grad.subspan(static_cast<std::size_t>(ae.encoder.parameterCount()));
}

double decoderImpl(const AutoencoderParams& ae, const TrainingSet& ts, const ForwardOperator& fwd,
                   double alpha, double beta, std::span<double> grad) {
  requireDecoderOrientation(ae, ts, fwd);
  const bool wantGrad = !grad.empty();
  ForwardTape te, td;
  const Matrix e = wantGrad ? ae.encoder.forward(ts.parameters(), te) : ae.encoder.forward(ts.parameters());
  const Matrix d = wantGrad ? ae.decoder.forward(e, td) : ae.decoder.forward(e);
  const Matrix r1 = ts.data() - e;
  const Matrix r2 = ts.parameters() - d;
  const Matrix r3 = ts.data() - fwd.applyColumns(d);
  const double loss =
      0.5 * alpha * r1.squaredNorm() + 0.5 * r2.squaredNorm() + 0.5 * beta * r3.squaredNorm();
  if (!wantGrad) return loss;

  checkFinite(e, LossKind::MCDecoder, "encoder output");
  checkFinite(d, LossKind::MCDecoder, "decoder output");
  checkFinite(r3, LossKind::MCDecoder, "model residual");
  const Matrix dD = -r2 - beta * fwd.adjointColumns(d, r3);
  Matrix dE = ae.decoder.backward(td, dD, decoderPart(ae, grad));
  dE -= alpha * r1;
  ae.encoder.backward(te, dE, encoderPart(ae, grad));
  return loss;
}

double decoderVarImpl(const AutoencoderParams& ae, const TrainingSet& ts,
                      const ForwardOperator& fwd, double beta, std::span<double> grad) {
  requireDecoderOrientation(ae, ts, fwd);
  const bool wantGrad = !grad.empty();
  ForwardTape te, td;
  const Matrix e = wantGrad ? ae.encoder.forward(ts.parameters(), te) : ae.encoder.forward(ts.parameters());
  const Matrix d = wantGrad ? ae.decoder.forward(e, td) : ae.decoder.forward(e);
  const Matrix r2 = ts.parameters() - d;
  const Matrix r3 = e - fwd.applyColumns(d);
  const double loss = 0.5 * r2.squaredNorm() + 0.5 * beta * r3.squaredNorm();
  if (!wantGrad) return loss;

  checkFinite(e, LossKind::MCDecoderVar, "encoder output");
  checkFinite(d, LossKind::MCDecoderVar, "decoder output");
  checkFinite(r3, LossKind::MCDecoderVar, "model residual");
  const Matrix dD = -r2 - beta * fwd.adjointColumns(d, r3);
  Matrix dE = ae.decoder.backward(td, dD, decoderPart(ae, grad));
  dE += beta * r3;
  ae.encoder.backward(te, dE, encoderPart(ae, grad));
  return loss;
}

double encoderImpl(const AutoencoderParams& ae, const TrainingSet& ts, const ForwardOperator& fwd,
                   double alpha, double beta, std::span<double> grad) {
  requireEncoderOrientation(ae, ts, fwd);
  const bool wantGrad = !grad.empty();
  ForwardTape te, td;
  const Matrix e = wantGrad ? ae.encoder.forward(ts.data(), te) : ae.encoder.forward(ts.data());
  const Matrix d = wantGrad ? ae.decoder.forward(e, td) : ae.decoder.forward(e);
  const Matrix r1 = ts.parameters() - e;
  const Matrix r2 = ts.data() - d;
  const Matrix r3 = ts.data() - fwd.applyColumns(e);
  const double loss =
      0.5 * alpha * r1.squaredNorm() + 0.5 * r2.squaredNorm() + 0.5 * beta * r3.squaredNorm();
  if (!wantGrad) return loss;

  checkFinite(e, LossKind::MCEncoder, "encoder output");
  checkFinite(d, LossKind::MCEncoder, "decoder output");
  checkFinite(r3, LossKind::MCEncoder, "model residual");
  Matrix dE = ae.decoder.backward(td, -r2, decoderPart(ae, grad));
  dE -= alpha * r1;
  dE -= beta * fwd.adjointColumns(e, r3);
  ae.encoder.backward(te, dE, encoderPart(ae, grad));
  return loss;
}

}  // namespace

double lossNDNN(const DenseNetwork& net, const TrainingSet& ts, double alpha1, double alpha2) {
  return ndnnImpl(net, ts, alpha1, alpha2, {});
}

double lossMCDNN(const DenseNetwork& net, const TrainingSet& ts, const ForwardOperator& fwd,
                 const GaussianPrior& prior, const NoiseModel& noise, double alpha) {
  return mcdnnImpl(net, ts, fwd, prior.precision(), noise.precision(), alpha, {});
}

double lossMCDecoder(const AutoencoderParams& ae, const TrainingSet& ts,
                     const ForwardOperator& fwd, double alpha, double beta) {
  return decoderImpl(ae, ts, fwd, alpha, beta, {});
}

double lossMCDecoderVar(const AutoencoderParams& ae, const TrainingSet& ts,
                        const ForwardOperator& fwd, double beta) {
  return decoderVarImpl(ae, ts, fwd, beta, {});
}

double lossMCEncoder(const AutoencoderParams& ae, const TrainingSet& ts,
                     const ForwardOperator& fwd, double alpha, double beta) {
  return encoderImpl(ae, ts, fwd, alpha, beta, {});
}

// ---------------------------------------------------------------------------

Objective::Objective(LossKind kind, Problem problem, DenseNetwork architecture)
    : kind_(kind), problem_(std::make_shared<const Problem>(std::move(problem))),
      net_(std::move(architecture)) {
  if (isAutoencoderLoss(kind))
    throw InvalidArgument("Objective: " + std::string(toString(kind)) +
                          " needs autoencoder parameters");
  problem_->hp.validate();
  if (kind == LossKind::MCDNN && (!problem_->prior || !problem_->noise))
    throw InvalidArgument("Objective: mcdnn needs a prior and a noise model");
  evaluate(initialParameters(), nullptr);  // shape check
}

Objective::Objective(LossKind kind, Problem problem, AutoencoderParams architecture)
    : kind_(kind), problem_(std::make_shared<const Problem>(std::move(problem))),
      ae_(std::move(architecture)) {
  if (!isAutoencoderLoss(kind))
    throw InvalidArgument("Objective: " + std::string(toString(kind)) +
                          " takes a single network, not an autoencoder");
  problem_->hp.validate();
  evaluate(initialParameters(), nullptr);
}

Eigen::Index Objective::dim() const {
  return net_ ? net_->parameterCount() : ae_->parameterCount();
}

Vector Objective::initialParameters() const { return net_ ? net_->flatten() : ae_->flatten(); }

double Objective::evaluate(const Vector& theta, Vector* grad) const {
  if (theta.size() != dim())
    throw InvalidArgument("Objective: parameter vector has length " +
                          std::to_string(theta.size()) + ", expected " + std::to_string(dim()));
  std::span<double> g;
  if (grad) {
    grad->setZero(dim());
    g = std::span<double>(grad->data(), static_cast<std::size_t>(grad->size()));
  }
  const std::span<const double> th(theta.data(), static_cast<std::size_t>(theta.size()));
  const Problem& p = *problem_;
  const Hyperparameters& hp = p.hp;

  switch (kind_) {
    case LossKind::NDNN:
      return ndnnImpl(net_->withParameters(th), p.data, hp.alpha1, hp.alpha2, g);
    case LossKind::MCDNN:
      return mcdnnImpl(net_->withParameters(th), p.data, p.forward, p.prior->precision(),
                       p.noise->precision(), hp.alpha, g);
    case LossKind::MCDecoder:
      return decoderImpl(ae_->withParameters(th), p.data, p.forward, hp.alpha, hp.beta, g);
    case LossKind::MCDecoderVar:
      return decoderVarImpl(ae_->withParameters(th), p.data, p.forward, hp.beta, g);
    case LossKind::MCEncoder:
      return encoderImpl(ae_->withParameters(th), p.data, p.forward, hp.alpha, hp.beta, g);
  }
  throw InternalError("Objective: unhandled loss kind");
}

double Objective::value(const Vector& theta) const { return evaluate(theta, nullptr); }

double Objective::valueAndGradient(const Vector& theta, Vector& grad) const {
  const double loss = evaluate(theta, &grad);
  if (!std::isfinite(loss))
    throw NumericError("non-finite loss value in the " + std::string(toString(kind_)) + " loss");
  if (!grad.allFinite())
    throw NumericError("non-finite gradient entry in the " + std::string(toString(kind_)) +
                       " loss");
  return loss;
}

Vector Objective::gradient(const Vector& theta) const {
  Vector g;
  valueAndGradient(theta, g);
  return g;
}

// ---------------------------------------------------------------------------

Vector finiteDifferenceGradient(const ScalarField& f, const Vector& theta, double h) {
  if (!(h > 0.0)) throw InvalidArgument("finiteDifferenceGradient: step must be positive");
  Vector g(theta.size());
  Vector x = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double xi = x(i);
    x(i) = xi + h;
    const double fp = f(x);
    x(i) = xi - h;
    const double fm = f(x);
    x(i) = xi;
    g(i) = (fp - fm) / (2.0 * h);
  }
  return g;
}

Vector finiteDifferenceGradientParallel(const ScalarField& f, const Vector& theta, double h) {
  if (!(h > 0.0)) throw InvalidArgument("finiteDifferenceGradient: step must be positive");
  const Eigen::Index n = theta.size();
  Vector g(n);
#pragma omp parallel
  {
    Vector x = theta;
#pragma omp for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
      const double xi = x(i);
      x(i) = xi + h;
      const double fp = f(x);
      x(i) = xi - h;
      const double fm = f(x);
      x(i) = xi;
      g(i) = (fp - fm) / (2.0 * h);
    }
  }
  return g;
}

Vector finiteDifferenceGradient(const Objective& objective, const Vector& theta, double h,
                                bool parallel) {
  const ScalarField f = [&objective](const Vector& x) { return objective.value(x); };
  return parallel ? finiteDifferenceGradientParallel(f, theta, h)
                  : finiteDifferenceGradient(f, theta, h);
}

}  // namespace mcinv
