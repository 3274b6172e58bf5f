#include "mcinv/optimizer.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "mcinv/error.hpp"

namespace mcinv {

namespace {

constexpr double kWolfeCurvature = 0.9;

}  // namespace

void OptimizerConfig::validate() const {
  if (!(stepSize > 0.0) || !std::isfinite(stepSize))
    throw InvalidArgument("optimizer: step size must be positive");
  if (!(maxStepSize >= stepSize)) throw InvalidArgument("optimizer: max step below step size");
  if (!(stepGrowth >= 1.0)) throw InvalidArgument("optimizer: step growth must be >= 1");
  if (maxIterations < 1) throw InvalidArgument("optimizer: max iterations must be >= 1");
  if (!(gradTolerance > 0.0)) throw InvalidArgument("optimizer: tolerance must be positive");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw InvalidArgument("optimizer: momentum must lie in [0, 1)");
  if (!(armijo > 0.0 && armijo < 1.0)) throw InvalidArgument("optimizer: Armijo constant in (0, 1)");
  if (maxBacktracks < 1) throw InvalidArgument("optimizer: need at least one backtrack");
  if (logEvery < 1) throw InvalidArgument("optimizer: logEvery must be >= 1");
}

OptimizationResult minimize(const ValueGradient& f, Vector theta0, const OptimizerConfig& cfg) {
  cfg.validate();
  OptimizationResult result;
  Vector theta = std::move(theta0);
  Vector grad(theta.size());
  double loss = f(theta, &grad);
  if (!std::isfinite(loss) || !grad.allFinite())
    throw DivergenceError("minimize: non-finite loss or gradient at the starting point", {});

  Vector direction = Vector::Zero(theta.size());
  double step = cfg.stepSize;
  long iter = 0;
  for (;; ++iter) {
    const double gnorm = grad.norm();
    const bool done = gnorm < cfg.gradTolerance || iter >= cfg.maxIterations;
    if (iter % cfg.logEvery == 0 || done) result.trace.push_back({iter, loss, gnorm});
    if (done) {
      result.converged = gnorm < cfg.gradTolerance;
      result.gradNorm = gnorm;
      break;
    }

    direction = cfg.momentum * direction - grad;
    double slope = grad.dot(direction);
    bool pureGradient = cfg.momentum == 0.0;
    if (!(slope < 0.0)) {
      direction = -grad;
      slope = -gnorm * gnorm;
      pureGradient = true;
    }

    // Armijo backtracking on the momentum direction, tested on the loss
    // difference so that a step too small to change the loss is not taken for
    // a decrease. Near a minimizer the Armijo decrease falls below the
    // rounding level of the loss; a step is then accepted if the loss rises by
    // no more than that level and the directional derivative shows progress
    // (approximate Wolfe conditions), bisecting between too-short and
    // too-long steps.
    bool accepted = false;
    bool haveTrialGrad = false;
    double trialLoss = loss;
    Vector trial, trialGrad(theta.size());
    const double resolution = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(loss);
    double lo = 0.0, hi = std::numeric_limits<double>::infinity();
    for (int k = 0; k < cfg.maxBacktracks; ++k) {
      trial = theta + step * direction;
      trialLoss = f(trial, nullptr);
      if (std::isfinite(trialLoss) && trialLoss - loss <= cfg.armijo * step * slope) {
        accepted = true;
        break;
      }
      bool tooShort = false;
      if (std::isfinite(trialLoss) && trialLoss <= loss + resolution) {
        const double trialGradLoss = f(trial, &trialGrad);
        const double dphi = trialGrad.dot(direction);
        if (trialGradLoss <= loss + resolution && trialGrad.allFinite()) {
          if (dphi >= kWolfeCurvature * slope && dphi <= (1.0 - 2.0 * cfg.armijo) * -slope) {
            trialLoss = trialGradLoss;
            haveTrialGrad = true;
            accepted = true;
            break;
          }
          tooShort = dphi < kWolfeCurvature * slope;
        }
      }
      if (tooShort) {
        lo = step;
        step = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * step;
      } else {
        hi = step;
        step = 0.5 * (lo + hi);
      }
    }
    if (!accepted) {
      // A pure gradient step as a last resort before giving up.
      if (!pureGradient) {
        direction = Vector::Zero(theta.size());
        step = cfg.stepSize;
        continue;
      }
      if (trialLoss == loss || (std::isfinite(trialLoss) && std::abs(trialLoss - loss) <=
                                                               1e-15 * std::abs(loss))) {
        // Stalled at floating-point resolution: report the current point.
        result.trace.push_back({iter, loss, gnorm});
        result.gradNorm = gnorm;
        break;
      }
      throw DivergenceError("minimize: line search failed at iteration " + std::to_string(iter),
                            result.trace);
    }

    theta = std::move(trial);
    if (haveTrialGrad) {
      grad = std::move(trialGrad);
      loss = trialLoss;
    } else {
      loss = f(theta, &grad);
    }
    if (!std::isfinite(loss) || !grad.allFinite())
      throw DivergenceError("minimize: non-finite loss at iteration " + std::to_string(iter + 1),
                            result.trace);
    step = std::min(step * cfg.stepGrowth, cfg.maxStepSize);
  }

  result.parameters = std::move(theta);
  result.iterations = iter;
  result.loss = loss;
  return result;
}

OptimizationResult minimize(const Objective& objective, Vector theta0, const OptimizerConfig& cfg) {
  const ValueGradient f = [&objective](const Vector& theta, Vector* grad) {
    return grad ? objective.valueAndGradient(theta, *grad) : objective.value(theta);
  };
  return minimize(f, std::move(theta0), cfg);
}

}  // namespace mcinv
