#include "mcinv/stationarity.hpp"

#include <algorithm>
#include <cmath>

#include "mcinv/closed_form.hpp"
#include "mcinv/error.hpp"
#include "mcinv/rng.hpp"

namespace mcinv {

namespace {

IdentityCheck identity(std::string name, const Matrix& lhs, const Matrix& rhs, double tol) {
  IdentityCheck c;
  c.name = std::move(name);
  c.residual = (lhs - rhs).norm() / std::max(1.0, rhs.norm());
  c.tolerance = tol;
  c.holds = c.residual <= tol;
  return c;
}

Vector zeros(Eigen::Index n) { return Vector::Zero(n); }

}  // namespace

bool StationaryCandidate::identitiesHold() const {
  return std::all_of(identities.begin(), identities.end(),
                     [](const IdentityCheck& c) { return c.holds; });
}

StationaryCandidate constructDecoderStationaryPoint(const ForwardOperator& fwd) {
  const Matrix& g = fwd.matrix();
  const Eigen::Index m = g.cols();
  if (g.rows() < m || numericalRank(g) < m)
    throw NoLeftInverse("constructDecoderStationaryPoint: G (" + std::to_string(g.rows()) + "x" +
                        std::to_string(m) + ") has no left inverse; Wd G = I is unsatisfiable");
  const Matrix gtg = g.transpose() * g;
  Eigen::LLT<Matrix> llt(gtg);
  if (llt.info() != Eigen::Success)
    throw NoLeftInverse("constructDecoderStationaryPoint: G^T G is not positive definite");
  Matrix wd = llt.solve(g.transpose());

  const Matrix eye = Matrix::Identity(m, m);
  auto check = identity("Wd G = I", wd * g, eye, 1e-10);
  if (!check.holds)
    throw NoLeftInverse("constructDecoderStationaryPoint: left inverse check failed (residual " +
                        std::to_string(check.residual) + ")");

  StationaryCandidate c{AutoencoderParams(DenseNetwork::affine(g, zeros(g.rows())),
                                          DenseNetwork::affine(std::move(wd), zeros(m))),
                        {std::move(check)}};
  return c;
}

StationaryCandidate constructDecoderVarStationaryPoint(const ForwardOperator& fwd) {
  const Matrix& g = fwd.matrix();
  const Eigen::Index n = g.rows();
  const Eigen::Index m = g.cols();
  if (n > m || numericalRank(g) < n)
    throw NoRightInverse("constructDecoderVarStationaryPoint: G (" + std::to_string(n) + "x" +
                         std::to_string(m) + ") has no right inverse");
  const Matrix ggt = g * g.transpose();
  Eigen::LLT<Matrix> llt(ggt);
  if (llt.info() != Eigen::Success)
    throw NoRightInverse("constructDecoderVarStationaryPoint: G G^T is not positive definite");
  // Wd = G^T (G G^T)^{-1}, computed as ((G G^T)^{-1} G)^T.
  Matrix wd = llt.solve(g).transpose();

  const Matrix eye = Matrix::Identity(n, n);
  std::vector<IdentityCheck> checks;
  checks.push_back(identity("G Wd = I", g * wd, eye, 1e-10));
  checks.push_back(identity("We Wd = I", g * wd, eye, 1e-10));
  if (!checks.front().holds)
    throw NoRightInverse("constructDecoderVarStationaryPoint: right inverse check failed");

  // Wd has full column rank, so its null space (and hence be) is {0}.
  return StationaryCandidate{AutoencoderParams(DenseNetwork::affine(g, zeros(n)),
                                               DenseNetwork::affine(std::move(wd), zeros(m))),
                             std::move(checks)};
}

StationaryCandidate constructEncoderStationaryPoint(const ForwardOperator& fwd,
                                                    const TrainingSet& ts) {
  const Matrix& g = fwd.matrix();
  const Eigen::Index n = g.rows();
  const Eigen::Index m = g.cols();
  if (ts.parameterDim() != m || ts.dataDim() != n)
    throw InvalidArgument("constructEncoderStationaryPoint: training set does not match G");
  const CenteredStatistics s = centeredStatistics(ts);
  if (numericalRank(s.centeredData, kPinvTolerance, s.dataScale) < n)
    throw InsufficientData("constructEncoderStationaryPoint: centered data (" + std::to_string(n) +
                           "x" + std::to_string(ts.count()) + ") does not have full row rank");

  const Matrix yyt = s.centeredData * s.centeredData.transpose();
  Eigen::LLT<Matrix> lltY(yyt);
  if (lltY.info() != Eigen::Success)
    throw InsufficientData("constructEncoderStationaryPoint: Ybar Ybar^T is singular");
  // We = Ubar Ybar^T (Ybar Ybar^T)^{-1}
  Matrix we = lltY.solve(s.centeredData * s.centeredParameters.transpose()).transpose();

  const Matrix wtw = we.transpose() * we;
  Eigen::LLT<Matrix> lltW(wtw);
  if (lltW.info() != Eigen::Success)
    throw InsufficientData("constructEncoderStationaryPoint: We has dependent columns");
  Matrix wd = lltW.solve(we.transpose());

  Vector be = s.meanParameter - we * s.meanData;
  Vector bd = s.meanData - wd * s.meanParameter;

  const Matrix eye = Matrix::Identity(n, n);
  std::vector<IdentityCheck> checks;
  checks.push_back(identity("G We = I", g * we, eye, 1e-8));
  checks.push_back(identity("Wd We = I", wd * we, eye, 1e-8));
  checks.push_back(identity("We = We Wd We", we * wd * we, we, 1e-8));
  checks.push_back(identity("We = We G We", we * g * we, we, 1e-8));

  return StationaryCandidate{AutoencoderParams(DenseNetwork::affine(std::move(we), std::move(be)),
                                               DenseNetwork::affine(std::move(wd), std::move(bd))),
                             std::move(checks)};
}

std::string_view toString(Expectation e) {
  switch (e) {
    case Expectation::Stationary: return "stationary";
    case Expectation::NotStationary: return "not-stationary";
    case Expectation::Measured: return "measured";
  }
  return "?";
}

bool StationarityCertificate::asExpected() const {
  switch (expectation) {
    case Expectation::Stationary: return pass;
    case Expectation::NotStationary: return !pass;
    case Expectation::Measured: return true;
  }
  return false;
}

namespace {

StationarityCertificate certifyObjective(const Objective& objective, const Vector& theta,
                                         double tol, std::string construction,
                                         std::uint64_t seed, Expectation expectation) {
  StationarityCertificate cert;
  cert.kind = objective.kind();
  cert.construction = std::move(construction);
  cert.tolerance = tol;
  cert.expectation = expectation;

  Vector grad;
  cert.loss = objective.valueAndGradient(theta, grad);
  cert.gradNorm = grad.norm();
  cert.fdGradNorm = finiteDifferenceGradient(objective, theta, kFiniteDifferenceStep).norm();

  Rng rng(seed);
  const Vector randomPoint = rng.normalMatrix(theta.size(), 1).col(0);
  cert.scaleReference = objective.gradient(randomPoint).norm();

  cert.relativeGradNorm = std::max(cert.gradNorm, cert.fdGradNorm) / (1.0 + cert.scaleReference);
  cert.pass = cert.relativeGradNorm < tol;
  return cert;
}

}  // namespace

StationarityCertificate certifyStationarity(LossKind kind, const AutoencoderParams& candidate,
                                            const Problem& problem, double tol,
                                            std::string construction, std::uint64_t seed,
                                            Expectation expectation) {
  const Objective objective(kind, problem, candidate);
  return certifyObjective(objective, candidate.flatten(), tol, std::move(construction), seed,
                          expectation);
}

StationarityCertificate certifyStationarity(LossKind kind, const DenseNetwork& candidate,
                                            const Problem& problem, double tol,
                                            std::string construction, std::uint64_t seed,
                                            Expectation expectation) {
  const Objective objective(kind, problem, candidate);
  return certifyObjective(objective, candidate.flatten(), tol, std::move(construction), seed,
                          expectation);
}

bool checkConsistent(const Vector& uHat, const ForwardOperator& fwd, const Vector& yObs,
                     double tol) {
  if (yObs.size() != fwd.observableDim())
    throw InvalidArgument("checkConsistent: observation has wrong length");
  return (fwd.apply(uHat) - yObs).norm() <= tol * (1.0 + yObs.norm());
}

bool checkEquivalent(const Vector& uHat, const Vector& uStar, const ForwardOperator& fwd,
                     double tol) {
  const Vector gStar = fwd.apply(uStar);
  return (fwd.apply(uHat) - gStar).norm() <= tol * (1.0 + gStar.norm());
}

// ---------------------------------------------------------------------------
// Bundled fixtures

namespace {

Matrix randomSpd(Rng& rng, Eigen::Index n) {
  const Matrix a = rng.normalMatrix(n, n);
  return a * a.transpose() / static_cast<double>(n) + Matrix::Identity(n, n);
}

Problem consistentProblem(const Matrix& g, const Matrix& u, double alpha, double beta) {
  Problem p{TrainingSet(u, g * u), ForwardOperator(g), std::nullopt, std::nullopt, {}};
  p.hp.alpha = alpha;
  p.hp.beta = beta;
  return p;
}

}  // namespace

std::vector<StationarityCertificate> certifyAll(std::uint64_t seed) {
  std::vector<StationarityCertificate> out;
  Rng rng(streamSeed(seed, 0));
  auto sub = [seed](std::uint64_t k) { return streamSeed(seed, 1, k); };

  // Closed-form affine maps for the two single-network objectives.
  {
    const Eigen::Index m = 4, n = 3, nt = 8;
    const Matrix g = rng.normalMatrix(n, m);
    const Matrix u = rng.normalMatrix(m, nt);
    const Matrix y = g * u + 0.1 * rng.normalMatrix(n, nt);
    Problem p{TrainingSet(u, y), ForwardOperator(g), std::nullopt, std::nullopt, {}};
    p.hp.alpha1 = 0.1;
    p.hp.alpha2 = 0.2;
    const AffineMap w0 = solveNDNNClosedForm(p.data, p.hp.alpha1, p.hp.alpha2);
    out.push_back(certifyStationarity(LossKind::NDNN, DenseNetwork::affine(w0), p, 1e-6,
                                      "ndnn closed form (W0, b0)", sub(1)));

    p.prior = GaussianPrior::fromCovariance(Vector::Zero(m), randomSpd(rng, m));
    p.noise = NoiseModel::fromCovariance(randomSpd(rng, n));
    p.hp.alpha = 0.7;
    const AffineMap wi = solveMCDNNClosedForm(p.data, p.forward, *p.prior, *p.noise, p.hp.alpha);
    out.push_back(certifyStationarity(LossKind::MCDNN, DenseNetwork::affine(wi), p, 1e-6,
                                      "mcdnn closed form (WI, bI)", sub(2)));
  }

  // Decoder formulation, n >= m, consistent data.
  {
    const Matrix g = rng.normalMatrix(5, 3);
    const Problem p = consistentProblem(g, rng.normalMatrix(3, 8), 1.0, 1.0);
    const auto c = constructDecoderStationaryPoint(p.forward);
    out.push_back(certifyStationarity(LossKind::MCDecoder, c.params, p, 1e-8,
                                      "We = G, Wd G = I (5x3 G)", sub(3)));
    const Problem pi = consistentProblem(Matrix::Identity(4, 4), rng.normalMatrix(4, 6), 1.0, 1.0);
    out.push_back(certifyStationarity(LossKind::MCDecoder,
                                      constructDecoderStationaryPoint(pi.forward).params, pi, 1e-8,
                                      "We = G, Wd G = I (G = I)", sub(4)));
  }

  // Decoder variant.
  {
    const Matrix g = rng.normalMatrix(4, 4) + 2.0 * Matrix::Identity(4, 4);
    const Problem p = consistentProblem(g, rng.normalMatrix(4, 7), 1.0, 1.0);
    const auto c = constructDecoderVarStationaryPoint(p.forward);
    out.push_back(certifyStationarity(LossKind::MCDecoderVar, c.params, p, 1e-8,
                                      "G Wd = I, We Wd = I (square G)", sub(5)));

    const Matrix gw = rng.normalMatrix(3, 5);
    const auto cw = constructDecoderVarStationaryPoint(ForwardOperator(gw));
    const Matrix& wd = cw.params.decoder.layers().front().weight;
    const Problem inRange = consistentProblem(gw, wd * rng.normalMatrix(3, 8), 1.0, 1.0);
    out.push_back(certifyStationarity(LossKind::MCDecoderVar, cw.params, inRange, 1e-8,
                                      "G Wd = I, We Wd = I (3x5 G, U in range(Wd))", sub(6)));

    const Problem generic = consistentProblem(gw, rng.normalMatrix(5, 8), 1.0, 1.0);
    auto cert = certifyStationarity(LossKind::MCDecoderVar, cw.params, generic, 1e-8,
                                    "G Wd = I, We Wd = I (3x5 G, generic U)", sub(7),
                                    Expectation::Measured);
    cert.notes = "(I - Wd G) U need not vanish for generic U";
    out.push_back(std::move(cert));
  }

  // Encoder formulation with the data-dependent right inverse.
  {
    const Eigen::Index m = 6, n = 3, nt = 10;
    const Matrix g = rng.normalMatrix(n, m);
    const Problem p = consistentProblem(g, rng.normalMatrix(m, nt), 1.0, 1.0);
    const auto c = constructEncoderStationaryPoint(p.forward, p.data);
    out.push_back(certifyStationarity(LossKind::MCEncoder, c.params, p, 1e-6,
                                      "G We = I, Wd We = I (consistent data)", sub(8)));

    const Matrix u = rng.normalMatrix(m, nt);
    Problem noisy{TrainingSet(u, g * u + 0.05 * rng.normalMatrix(n, nt)), ForwardOperator(g),
                  std::nullopt, std::nullopt, {}};
    const auto cn = constructEncoderStationaryPoint(noisy.forward, noisy.data);
    auto cert = certifyStationarity(LossKind::MCEncoder, cn.params, noisy, 1e-6,
                                    "G We = I, Wd We = I (noisy data)", sub(9),
                                    Expectation::Measured);
    cert.notes = "identities hold: " + std::string(cn.identitiesHold() ? "yes" : "no");
    out.push_back(std::move(cert));
  }

  // Negative control: a random linear autoencoder is not stationary.
  {
    const Matrix g = rng.normalMatrix(5, 3);
    const Problem p = consistentProblem(g, rng.normalMatrix(3, 8), 1.0, 1.0);
    const AutoencoderParams random(DenseNetwork::initialize(3, {}, 5, sub(10)),
                                   DenseNetwork::initialize(5, {}, 3, sub(11)));
    out.push_back(certifyStationarity(LossKind::MCDecoder, random, p, 1e-8,
                                      "random linear autoencoder", sub(12),
                                      Expectation::NotStationary));
  }
  return out;
}

}  // namespace mcinv
