// Serial reference vs OpenMP kernels: finite-difference gradients and the
// repetition runner of the deconvolution study.
#include <benchmark/benchmark.h>
#include <omp.h>

#include "mcinv/experiment.hpp"
#include "mcinv/losses.hpp"
#include "mcinv/rng.hpp"

namespace {

using namespace mcinv;

Objective makeObjective() {
  Rng rng(7);
  const Matrix g = rng.normalMatrix(8, 20);
  const Matrix u = rng.normalMatrix(20, 40);
  TrainingSet ts(u, g * u + 0.01 * rng.normalMatrix(8, 40));
  const LayerSpec hidden[] = {{16, Activation::Tanh}};
  Problem p{ts, ForwardOperator(g), std::nullopt, std::nullopt, Hyperparameters{}};
  p.hp.alpha = 0.5;
  p.hp.beta = 1.0;
  return Objective(LossKind::MCEncoder, p,
                   AutoencoderParams(DenseNetwork::initialize(8, hidden, 20, 1),
                                     DenseNetwork::initialize(20, hidden, 8, 2)));
}

void BM_FiniteDifferenceSerial(benchmark::State& state) {
  const Objective obj = makeObjective();
  const Vector theta = obj.initialParameters();
  for (auto _ : state) benchmark::DoNotOptimize(finiteDifferenceGradient(obj, theta, 1e-5, false));
  state.counters["params"] = static_cast<double>(theta.size());
}
BENCHMARK(BM_FiniteDifferenceSerial)->Unit(benchmark::kMillisecond);

void BM_FiniteDifferenceParallel(benchmark::State& state) {
  const Objective obj = makeObjective();
  const Vector theta = obj.initialParameters();
  for (auto _ : state) benchmark::DoNotOptimize(finiteDifferenceGradient(obj, theta, 1e-5, true));
  state.counters["threads"] = omp_get_max_threads();
}
BENCHMARK(BM_FiniteDifferenceParallel)->Unit(benchmark::kMillisecond);

ExperimentConfig smallStudy() {
  ExperimentConfig cfg;
  cfg.repetitions = 4;
  cfg.trainingSizes = {30, 60};
  cfg.alphaGrid = logspace(1e-2, 1e2, 5);
  cfg.ndnnGrid = logspace(1e-2, 1e2, 3);
  return cfg;
}

void BM_ExperimentSerial(benchmark::State& state) {
  const ExperimentConfig cfg = smallStudy();
  for (auto _ : state) benchmark::DoNotOptimize(runExperimentSerial(cfg));
}
BENCHMARK(BM_ExperimentSerial)->Unit(benchmark::kMillisecond);

void BM_ExperimentParallel(benchmark::State& state) {
  const ExperimentConfig cfg = smallStudy();
  const int threads = omp_get_max_threads();
  for (auto _ : state) benchmark::DoNotOptimize(runExperimentParallel(cfg, threads));
  state.counters["threads"] = threads;
}
BENCHMARK(BM_ExperimentParallel)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
