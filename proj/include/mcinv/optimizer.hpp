#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

#include "mcinv/linalg.hpp"
#include "mcinv/losses.hpp"

namespace mcinv {

struct OptimizerConfig {
  double stepSize = 1e-2;       // initial trial step
  double maxStepSize = 1e6;     // cap for the adaptive step growth
  double stepGrowth = 2.0;      // trial step multiplier after an accepted step
  long maxIterations = 100000;
  double gradTolerance = 1e-8;  // stop when ||grad|| < gradTolerance
  double momentum = 0.9;        // heavy-ball coefficient on the previous direction
  double armijo = 1e-4;         // sufficient-decrease constant
  int maxBacktracks = 60;
  long logEvery = 1;            // trace every k-th iteration (the last one is always logged)
  std::uint64_t seed = 0;       // for network initialization by callers

  void validate() const;
};

struct TraceEntry {
  long iteration = 0;
  double loss = 0.0;
  double gradNorm = 0.0;
};

struct OptimizationResult {
  Vector parameters;
  std::vector<TraceEntry> trace;
  bool converged = false;
  long iterations = 0;
  double loss = 0.0;
  double gradNorm = 0.0;
};

/// Thrown when the loss becomes non-finite or no step can reduce it.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, std::vector<TraceEntry> trace)
      : std::runtime_error(what), trace_(std::move(trace)) {}
  const std::vector<TraceEntry>& trace() const { return trace_; }

 private:
  std::vector<TraceEntry> trace_;
};

/// Returns the loss; when `grad` is non-null also writes the gradient.
using ValueGradient = std::function<double(const Vector& theta, Vector* grad)>;

/// Gradient descent with heavy-ball momentum wrapped in an Armijo
/// backtracking line search, so the loss never increases between iterates
/// (beyond 64 ulps of the loss once progress is below its rounding level).
OptimizationResult minimize(const ValueGradient& f, Vector theta0, const OptimizerConfig& cfg);

OptimizationResult minimize(const Objective& objective, Vector theta0, const OptimizerConfig& cfg);

}  // namespace mcinv
