#include <gtest/gtest.h>

#include <limits>

#include "mcinv/error.hpp"
#include "mcinv/losses.hpp"
#include "mcinv/stationarity.hpp"
#include "test_support.hpp"

using namespace mcinv;
using namespace mcinv::testing;

namespace {

Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

DenseNetwork scalarAffine(double w, double b = 0.0) {
  return DenseNetwork::affine(scalar(w), Vector::Constant(1, b));
}

Problem randomProblem(Rng& rng, Eigen::Index m, Eigen::Index n, Eigen::Index nt, Hyperparameters hp) {
  const Matrix g = rng.normalMatrix(n, m);
  const Matrix u = rng.normalMatrix(m, nt);
  return {TrainingSet(u, g * u + 0.1 * rng.normalMatrix(n, nt)), ForwardOperator(g),
          GaussianPrior::fromCovariance(rng.normalMatrix(m, 1), randomSpd(rng, m)),
          NoiseModel::fromCovariance(randomSpd(rng, n)), hp};
}

const LossKind kAllLosses[] = {LossKind::NDNN, LossKind::MCDNN, LossKind::MCDecoder,
                               LossKind::MCDecoderVar, LossKind::MCEncoder};

Objective objectiveFor(LossKind kind, const Problem& p, std::span<const LayerSpec> hidden,
                       std::uint64_t seed) {
  const Eigen::Index m = p.data.parameterDim(), n = p.data.dataDim();
  switch (kind) {
    case LossKind::NDNN:
    case LossKind::MCDNN:
      return Objective(kind, p, DenseNetwork::initialize(n, hidden, m, seed));
    case LossKind::MCEncoder:
      return Objective(kind, p,
                       AutoencoderParams(DenseNetwork::initialize(n, hidden, m, seed),
                                         DenseNetwork::initialize(m, hidden, n, seed + 1)));
    default:
      return Objective(kind, p,
                       AutoencoderParams(DenseNetwork::initialize(m, hidden, n, seed),
                                         DenseNetwork::initialize(n, hidden, m, seed + 1)));
  }
}

}  // namespace

TEST(LossNDNN, HandEvaluations) {
  const TrainingSet ts(scalar(1), scalar(2));
  EXPECT_DOUBLE_EQ(lossNDNN(scalarAffine(0), ts, 1, 1), 0.5);
  // Perfect fit: u = 0.5 y.
  EXPECT_DOUBLE_EQ(lossNDNN(scalarAffine(0.5), ts, 0, 0), 0.0);
  Rng rng(1);
  const TrainingSet zeroU(Matrix::Zero(2, 4), rng.normalMatrix(3, 4));
  EXPECT_DOUBLE_EQ(lossNDNN(DenseNetwork::affine(Matrix::Zero(2, 3), Vector::Zero(2)), zeroU, 0, 0), 0.0);
  // Penalties: W = 2, b = 3 add a1/2 * 4 + a2/2 * 9.
  EXPECT_DOUBLE_EQ(lossNDNN(scalarAffine(2, 3), TrainingSet(scalar(7), scalar(2)), 1, 2), 0 + 2 + 9);
}

TEST(LossMCDNN, HandEvaluations) {
  const ForwardOperator g(scalar(2));
  const GaussianPrior prior = GaussianPrior::identity(Vector::Zero(1));
  const NoiseModel noise = NoiseModel::isotropic(1, 1.0);
  EXPECT_DOUBLE_EQ(lossMCDNN(scalarAffine(0), TrainingSet(scalar(1), scalar(2)), g, prior, noise, 1.0), 2.5);
  EXPECT_DOUBLE_EQ(lossMCDNN(scalarAffine(0.5), TrainingSet(scalar(1), scalar(2)), g, prior, noise, 1.0), 0.0);
}

TEST(LossMCDNN, WeightedNormsUseThePrecisions) {
  const ForwardOperator g(scalar(1));
  const GaussianPrior prior = GaussianPrior::fromCovariance(Vector::Zero(1), scalar(4));
  const NoiseModel noise = NoiseModel::isotropic(1, 0.5);
  // 1/2 * 1^2 / 4 + 3/2 * 2^2 / 0.25
  EXPECT_DOUBLE_EQ(lossMCDNN(scalarAffine(0), TrainingSet(scalar(1), scalar(2)), g, prior, noise, 3.0),
                   0.125 + 24.0);
}

TEST(LossMCDecoder, HandEvaluations) {
  const ForwardOperator g(scalar(1));
  const AutoencoderParams ae(scalarAffine(1), scalarAffine(0));
  EXPECT_DOUBLE_EQ(lossMCDecoder(ae, TrainingSet(scalar(1), scalar(1)), g, 1, 1), 1.0);
  const AutoencoderParams zero(scalarAffine(0), scalarAffine(0));
  EXPECT_DOUBLE_EQ(lossMCDecoder(zero, TrainingSet(scalar(0), scalar(0)), g, 1, 1), 0.0);
}

TEST(LossMCDecoder, LeftInverseOnConsistentDataIsZero) {
  Rng rng(2);
  const ForwardOperator g(rng.normalMatrix(5, 3));
  const Matrix u = rng.normalMatrix(3, 8);
  const StationaryCandidate c = constructDecoderStationaryPoint(g);
  EXPECT_LT(lossMCDecoder(c.params, TrainingSet(u, g.matrix() * u), g, 0.7, 1.3), 1e-20);
}

TEST(LossMCDecoderVar, HandEvaluations) {
  const ForwardOperator g(scalar(2));
  const AutoencoderParams ae(scalarAffine(2), scalarAffine(0));
  EXPECT_DOUBLE_EQ(lossMCDecoderVar(ae, TrainingSet(scalar(1), scalar(0)), g, 1.0), 2.5);
  const AutoencoderParams zero(scalarAffine(0), scalarAffine(0));
  EXPECT_DOUBLE_EQ(lossMCDecoderVar(zero, TrainingSet(scalar(0), scalar(3)), g, 1.0), 0.0);
}

TEST(LossMCDecoderVar, SquareInverseIsZeroOnAnyData) {
  Rng rng(3);
  const Matrix gm = rng.normalMatrix(4, 4) + 4 * Matrix::Identity(4, 4);
  const ForwardOperator g(gm);
  const AutoencoderParams ae(DenseNetwork::affine(gm, Vector::Zero(4)),
                             DenseNetwork::affine(gm.inverse(), Vector::Zero(4)));
  const Matrix u = rng.normalMatrix(4, 6);
  EXPECT_LT(lossMCDecoderVar(ae, TrainingSet(u, rng.normalMatrix(4, 6)), g, 2.0), 1e-20);
}

TEST(LossMCEncoder, HandEvaluations) {
  const ForwardOperator g(scalar(2));
  const AutoencoderParams zero(scalarAffine(0), scalarAffine(0));
  EXPECT_DOUBLE_EQ(lossMCEncoder(zero, TrainingSet(scalar(1), scalar(2)), g, 1, 1), 4.5);
  EXPECT_DOUBLE_EQ(lossMCEncoder(zero, TrainingSet(scalar(0), scalar(0)), g, 1, 1), 0.0);
  // Pe(y) = y / 2 = u, Pd(u) = 2 u = y, y = G u.
  const AutoencoderParams exact(scalarAffine(0.5), scalarAffine(2));
  EXPECT_DOUBLE_EQ(lossMCEncoder(exact, TrainingSet(scalar(1), scalar(2)), g, 1, 1), 0.0);
}

TEST(Losses, DimensionMismatchIsRejected) {
  const ForwardOperator g(Matrix::Identity(2, 2));
  const TrainingSet ts(Matrix::Zero(2, 3), Matrix::Zero(2, 3));
  EXPECT_THROW(lossNDNN(DenseNetwork::affine(Matrix::Zero(3, 2), Vector::Zero(3)), ts, 0, 0), InvalidArgument);
  const AutoencoderParams wrong(DenseNetwork::affine(Matrix::Zero(3, 2), Vector::Zero(3)),
                                DenseNetwork::affine(Matrix::Zero(2, 3), Vector::Zero(2)));
  EXPECT_THROW(lossMCDecoder(wrong, ts, g, 1, 1), InvalidArgument);
  EXPECT_THROW(lossMCEncoder(wrong, ts, g, 1, 1), InvalidArgument);
}

TEST(Losses, NonnegativeAtRandomPoints) {
  Rng rng(4);
  const LayerSpec hidden[] = {{4, Activation::Tanh}};
  for (int k = 0; k < 5; ++k) {
    const Problem p = randomProblem(rng, 4, 3, 6, {0.3, 0.2, 0.5, 0.8});
    for (LossKind kind : kAllLosses) {
      const Objective obj = objectiveFor(kind, p, hidden, 10 + k);
      EXPECT_GE(obj.value(5.0 * rng.normalMatrix(obj.dim(), 1)), 0.0);
    }
  }
}

TEST(Gradients, MatchCentralDifferencesForAllLosses) {
  Rng rng(5);
  const LayerSpec tanhNet[] = {{5, Activation::Tanh}};
  const LayerSpec mixed[] = {{4, Activation::Softplus}, {3, Activation::Tanh}};
  for (int k = 0; k < 20; ++k) {
    const Eigen::Index m = 2 + k % 7, n = 1 + k % 5, nt = 3 + k % 10;
    const Problem p = randomProblem(rng, m, n, nt, {0.1 * k, 0.05 * k, 0.3 + 0.1 * k, 0.2 + 0.05 * k});
    std::span<const LayerSpec> hidden;
    if (k % 3 == 1) hidden = tanhNet;
    if (k % 3 == 2) hidden = mixed;
    for (LossKind kind : kAllLosses) {
      const Objective obj = objectiveFor(kind, p, hidden, 100 + k);
      const Vector theta = rng.normalMatrix(obj.dim(), 1);
      const Vector g = obj.gradient(theta);
      const Vector fd = centralDifference([&](const Vector& t) { return obj.value(t); }, theta, 1e-5);
      EXPECT_LT((g - fd).norm() / std::max(fd.norm(), 1e-12), 1e-5)
          << toString(kind) << " configuration " << k;
    }
  }
}

TEST(Gradients, LinearInParametersForLinearNetworks) {
  Rng rng(6);
  const Problem p = randomProblem(rng, 4, 3, 5, {0.2, 0.3, 0.7, 0.9});
  for (LossKind kind : kAllLosses) {
    if (kind == LossKind::MCDecoder || kind == LossKind::MCDecoderVar || kind == LossKind::MCEncoder) {
      // Encoder-decoder products make these quartic in theta.
      continue;
    }
    const Objective obj = objectiveFor(kind, p, {}, 1);
    const Vector t1 = rng.normalMatrix(obj.dim(), 1), t2 = rng.normalMatrix(obj.dim(), 1);
    const Vector lhs = obj.gradient(t1 + t2) + obj.gradient(Vector::Zero(obj.dim()));
    const Vector rhs = obj.gradient(t1) + obj.gradient(t2);
    EXPECT_LT((lhs - rhs).norm(), 1e-10 * (1.0 + rhs.norm())) << toString(kind);
  }
}

TEST(Gradients, VanishAtZeroLossMinimum) {
  const ForwardOperator g(scalar(2));
  const Problem p{TrainingSet(scalar(1), scalar(2)), g, GaussianPrior::identity(Vector::Zero(1)),
                  NoiseModel::isotropic(1, 1.0), {0, 0, 1, 1}};
  const Objective mc(LossKind::MCDNN, p, scalarAffine(0.5));
  EXPECT_LT(mc.gradient(mc.initialParameters()).norm(), 1e-12);
  const Objective enc(LossKind::MCEncoder, p, AutoencoderParams(scalarAffine(0.5), scalarAffine(2)));
  EXPECT_LT(enc.gradient(enc.initialParameters()).norm(), 1e-12);
}

TEST(Gradients, NonFiniteStageIsReported) {
  Rng rng(7);
  const Problem p = randomProblem(rng, 3, 2, 4, {});
  const Objective obj(LossKind::NDNN, p, DenseNetwork::initialize(2, {}, 3, 1));
  Vector theta = obj.initialParameters();
  theta(0) = std::numeric_limits<double>::infinity();
  EXPECT_FALSE(std::isfinite(obj.value(theta)));
  try {
    obj.gradient(theta);
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("ndnn"), std::string::npos) << e.what();
  }
}

TEST(Objective, RequiresPriorAndNoiseForMCDNN) {
  Rng rng(8);
  Problem p = randomProblem(rng, 3, 2, 4, {});
  p.prior.reset();
  EXPECT_THROW(Objective(LossKind::MCDNN, p, DenseNetwork::initialize(2, {}, 3, 1)), InvalidArgument);
  EXPECT_THROW(Objective(LossKind::MCEncoder, p, DenseNetwork::initialize(2, {}, 3, 1)), InvalidArgument);
}

TEST(FiniteDifference, QuadraticAndConstant) {
  Rng rng(9);
  const Vector x = rng.normalMatrix(6, 1);
  const Vector g = finiteDifferenceGradient([](const Vector& t) { return 0.5 * t.squaredNorm(); }, x);
  EXPECT_LT((g - x).norm(), 1e-9);
  EXPECT_EQ(finiteDifferenceGradient([](const Vector&) { return 3.0; }, x).norm(), 0.0);
}

TEST(FiniteDifference, ParallelMatchesSerialBitForBit) {
  Rng rng(10);
  const LayerSpec hidden[] = {{6, Activation::Tanh}};
  const Problem p = randomProblem(rng, 5, 3, 7, {0.1, 0.1, 0.5, 0.5});
  const Objective obj = objectiveFor(LossKind::MCEncoder, p, hidden, 3);
  const Vector theta = rng.normalMatrix(obj.dim(), 1);
  const Vector serial = finiteDifferenceGradient(obj, theta, 1e-5, false);
  const Vector parallel = finiteDifferenceGradient(obj, theta, 1e-5, true);
  ASSERT_EQ(serial.size(), parallel.size());
  EXPECT_EQ(std::memcmp(serial.data(), parallel.data(), sizeof(double) * serial.size()), 0);
}
