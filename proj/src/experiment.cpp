#include "mcinv/experiment.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <tuple>
#include <utility>

#include "mcinv/closed_form.hpp"
#include "mcinv/error.hpp"
#include "mcinv/rng.hpp"

namespace mcinv {

std::vector<double> logspace(double lo, double hi, int count) {
  if (!(lo > 0.0) || !(hi >= lo) || count < 1)
    throw InvalidArgument("logspace: need 0 < lo <= hi and count >= 1");
  if (count == 1) return {lo};
  std::vector<double> out(static_cast<std::size_t>(count));
  const double a = std::log10(lo);
  const double b = std::log10(hi);
  for (int i = 0; i < count; ++i)
    out[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (count - 1));
  out.front() = lo;
  out.back() = hi;
  return out;
}

std::string_view toString(StudyKind kind) {
  return kind == StudyKind::Sweep ? "sweep" : "convergence";
}

StudyKind studyKindFromString(std::string_view s) {
  if (s == "sweep") return StudyKind::Sweep;
  if (s == "convergence") return StudyKind::Convergence;
  throw InvalidArgument("unknown study kind '" + std::string(s) + "'");
}

std::string_view toString(Method method) {
  switch (method) {
    case Method::NDNN: return "ndnn";
    case Method::MCDNNUnweighted: return "mcdnn_unweighted";
    case Method::MCDNN: return "mcdnn";
    case Method::Tikhonov: return "tikhonov";
  }
  return "?";
}

void ExperimentConfig::validate() const {
  if (gridSize < 3) throw InvalidArgument("grid_size must be >= 3");
  if (!(kernelWidth > 0.0)) throw InvalidArgument("kernel_width must be positive");
  if (obsCount < 1 || obsCount > gridSize) throw InvalidArgument("obs_count must be in [1, grid_size]");
  if (!(noise.fraction >= 0.0) || !std::isfinite(noise.fraction))
    throw InvalidArgument("noise_fraction must be nonnegative");
  if (!(noise.weightFloor > 0.0)) throw InvalidArgument("noise_weight_floor must be positive");
  if (!(priorScale > 0.0)) throw InvalidArgument("prior_scale must be positive");
  if (!(boundaryRelaxation >= 0.0)) throw InvalidArgument("boundary_relaxation must be nonnegative");
  if (trainingSizes.empty()) throw InvalidArgument("training_sizes must be nonempty");
  for (auto s : trainingSizes)
    if (s < 1) throw InvalidArgument("training sizes must be positive");
  if (testSize < 1) throw InvalidArgument("test_size must be >= 1");
  if (repetitions < 1) throw InvalidArgument("repetitions must be >= 1");
  if (alphaGrid.empty() || ndnnGrid.empty()) throw InvalidArgument("hyperparameter grids must be nonempty");
  for (double a : alphaGrid)
    if (!(a > 0.0) || !std::isfinite(a)) throw InvalidArgument("alpha_grid entries must be positive");
  for (double a : ndnnGrid)
    if (!(a >= 0.0) || !std::isfinite(a)) throw InvalidArgument("ndnn_grid entries must be nonnegative");
  if (!(pinvTolerance > 0.0)) throw InvalidArgument("pinv_tolerance must be positive");
  if (study == StudyKind::Convergence)
    for (std::size_t i = 1; i < trainingSizes.size(); ++i)
      if (trainingSizes[i] <= trainingSizes[i - 1])
        throw InvalidArgument("convergence study needs strictly increasing training sizes");
}

double relativeError(const Vector& uHat, const Vector& uStar) {
  if (uHat.size() != uStar.size()) throw InvalidArgument("relativeError: length mismatch");
  const double denom = uStar.norm();
  if (denom == 0.0) throw UndefinedMetric("relativeError: reference vector is zero");
  return (uHat - uStar).norm() / denom;
}

namespace {

// Stream purposes within one repetition.
enum Purpose : std::uint64_t {
  kIndices = 0,
  kTrainParameters = 1,
  kTrainNoise = 2,
  kTestParameters = 3,
  kTestNoise = 4,
};

double meanRelativeError(const Matrix& predicted, const Matrix& truth) {
  double sum = 0.0;
  for (Eigen::Index j = 0; j < truth.cols(); ++j)
    sum += relativeError(predicted.col(j), truth.col(j));
  return sum / static_cast<double>(truth.cols());
}

template <class Fit>
void record(std::vector<ErrorRecord>& out, ErrorRecord rec, Fit&& fit) {
  try {
    rec.relError = fit();
    rec.failed = !std::isfinite(rec.relError);
  } catch (const std::exception&) {
    rec.relError = std::numeric_limits<double>::quiet_NaN();
    rec.failed = true;
  }
  out.push_back(rec);
}

}  // namespace

ProblemInstance drawInstance(const ExperimentConfig& cfg, const GaussianPrior& prior, int r,
                             Eigen::Index trainingCount) {
  if (r < 0) throw InvalidArgument("drawInstance: repetition index must be nonnegative");
  const auto rep = static_cast<std::uint64_t>(r);
  const std::uint64_t seed = cfg.masterSeed;
  auto indices = drawObservationIndices(
      cfg.gridSize, cfg.obsCount,
      cfg.fixedIndices ? streamSeed(seed, 0xF1ED, kIndices) : streamSeed(seed, rep, kIndices));
  ForwardOperator fwd = buildGaussianBlurOperator(cfg.gridSize, cfg.kernelWidth, indices);

  const Matrix uPool = samplePrior(prior, trainingCount, streamSeed(seed, rep, kTrainParameters));
  GeneratedData gen = generateTrainingSet(fwd, uPool, cfg.noise, streamSeed(seed, rep, kTrainNoise));

  Matrix uTest = samplePrior(prior, cfg.testSize, streamSeed(seed, rep, kTestParameters));
  Matrix yTest;
  // Test observations carry the same noise level as the training data.
  if (cfg.noise.mode == NoiseMode::MaxAbsolute)
    yTest = addNoise(fwd.applyColumns(uTest), gen.sampleSigma, streamSeed(seed, rep, kTestNoise));
  else
    yTest = generateTrainingSet(fwd, uTest, cfg.noise, streamSeed(seed, rep, kTestNoise)).set.data();
  return {std::move(indices), std::move(fwd), std::move(gen), std::move(uTest), std::move(yTest)};
}

GaussianPrior experimentPrior(const ExperimentConfig& cfg) {
  return buildFEPrior(cfg.priorKind, cfg.gridSize, cfg.priorScale, cfg.boundaryRelaxation);
}

std::vector<ErrorRecord> runRepetition(const ExperimentConfig& cfg, const GaussianPrior& prior,
                                       int r) {
  // One nested training pool per repetition: size n_t uses its first n_t columns.
  const Eigen::Index pool = *std::max_element(cfg.trainingSizes.begin(), cfg.trainingSizes.end());
  const ProblemInstance inst = drawInstance(cfg, prior, r, pool);
  const ForwardOperator& fwd = inst.forward;
  const GeneratedData& gen = inst.train;
  const Matrix& uTest = inst.testParameters;
  const Matrix& yTest = inst.testData;

  // The classical solver ignores the training set, so compute it once.
  std::vector<double> tikhonov;
  tikhonov.reserve(cfg.alphaGrid.size());
  for (double alpha : cfg.alphaGrid) {
    try {
      tikhonov.push_back(meanRelativeError(
          tikhonovSolveColumns(fwd, gen.noise, prior, alpha, yTest, prior.mean()), uTest));
    } catch (const std::exception&) {
      tikhonov.push_back(std::numeric_limits<double>::quiet_NaN());
    }
  }

  std::vector<ErrorRecord> out;
  const double tol = cfg.pinvTolerance;
  for (const Eigen::Index nt : cfg.trainingSizes) {
    const TrainingSet ts = gen.set.head(nt);
    for (double a1 : cfg.ndnnGrid)
      for (double a2 : cfg.ndnnGrid)
        record(out, {Method::NDNN, nt, a1, a2, r, 0.0, false}, [&] {
          return meanRelativeError(predictColumns(solveNDNNClosedForm(ts, a1, a2, tol), yTest), uTest);
        });
    for (double alpha : cfg.alphaGrid)
      record(out, {Method::MCDNNUnweighted, nt, alpha, 0.0, r, 0.0, false}, [&] {
        return meanRelativeError(predictColumns(solveMCDNNUnweighted(ts, fwd, alpha, tol), yTest),
                                 uTest);
      });
    for (double alpha : cfg.alphaGrid)
      record(out, {Method::MCDNN, nt, alpha, 0.0, r, 0.0, false}, [&] {
        return meanRelativeError(
            predictColumns(solveMCDNNClosedForm(ts, fwd, prior, gen.noise, alpha, tol), yTest), uTest);
      });
    for (std::size_t k = 0; k < cfg.alphaGrid.size(); ++k)
      record(out, {Method::Tikhonov, nt, cfg.alphaGrid[k], 0.0, r, 0.0, false},
             [&] { return tikhonov[k]; });
  }
  return out;
}

namespace {

ErrorReport concatenate(const ExperimentConfig& cfg, std::vector<std::vector<ErrorRecord>>& slots) {
  ErrorReport report;
  report.priorKind = cfg.priorKind;
  for (auto& s : slots) report.records.insert(report.records.end(), s.begin(), s.end());
  return report;
}

}  // namespace

ErrorReport runExperimentSerial(const ExperimentConfig& cfg) {
  cfg.validate();
  const GaussianPrior prior = experimentPrior(cfg);
  std::vector<std::vector<ErrorRecord>> slots(static_cast<std::size_t>(cfg.repetitions));
  for (int r = 0; r < cfg.repetitions; ++r) slots[static_cast<std::size_t>(r)] = runRepetition(cfg, prior, r);
  return concatenate(cfg, slots);
}

ErrorReport runExperimentParallel(const ExperimentConfig& cfg, int threads) {
  cfg.validate();
  if (threads < 1) throw InvalidArgument("runExperimentParallel: threads must be >= 1");
  const GaussianPrior prior = experimentPrior(cfg);
  std::vector<std::vector<ErrorRecord>> slots(static_cast<std::size_t>(cfg.repetitions));
  std::string failure;
#pragma omp parallel for num_threads(threads) schedule(dynamic, 1)
  for (int r = 0; r < cfg.repetitions; ++r) {
    try {
      slots[static_cast<std::size_t>(r)] = runRepetition(cfg, prior, r);
    } catch (const std::exception& e) {
#pragma omp critical(mcinv_experiment_failure)
      if (failure.empty()) failure = e.what();
    }
  }
  if (!failure.empty()) throw InternalError("runExperimentParallel: " + failure);
  return concatenate(cfg, slots);
}

ErrorReport runExperiment(const ExperimentConfig& cfg, int parallelism) {
  return parallelism <= 1 ? runExperimentSerial(cfg) : runExperimentParallel(cfg, parallelism);
}

std::vector<AggregateRow> aggregate(const ErrorReport& report) {
  // Key keeps first-seen order: records already arrive sorted by size, method
  // and grid position within each repetition.
  using Key = std::tuple<int, Eigen::Index, double, double>;
  std::map<Key, std::size_t> index;
  std::vector<AggregateRow> rows;
  std::vector<std::vector<std::pair<int, double>>> values;
  for (const auto& rec : report.records) {
    const Key key{static_cast<int>(rec.method), rec.trainingSize, rec.alpha, rec.alpha2};
    auto [it, inserted] = index.emplace(key, rows.size());
    if (inserted) {
      AggregateRow row;
      row.method = rec.method;
      row.trainingSize = rec.trainingSize;
      row.alpha = rec.alpha;
      row.alpha2 = rec.alpha2;
      rows.push_back(row);
      values.emplace_back();
    }
    if (rec.failed)
      ++rows[it->second].failed;
    else
      values[it->second].emplace_back(rec.repetition, rec.relError);
  }
  for (std::size_t i = 0; i < rows.size(); ++i) {
    auto& row = rows[i];
    // Reduce in repetition order so the result does not depend on the order
    // in which repetitions were executed.
    std::stable_sort(values[i].begin(), values[i].end(),
                     [](const auto& a, const auto& b) { return a.first < b.first; });
    std::vector<double> v;
    v.reserve(values[i].size());
    for (const auto& [rep, x] : values[i]) v.push_back(x);
    row.count = static_cast<int>(v.size());
    if (v.empty()) {
      row.mean = row.stddev = row.min = row.max = std::numeric_limits<double>::quiet_NaN();
      continue;
    }
    double sum = 0.0;
    for (double x : v) sum += x;
    row.mean = sum / static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - row.mean) * (x - row.mean);
    row.stddev = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
    row.min = *std::min_element(v.begin(), v.end());
    row.max = *std::max_element(v.begin(), v.end());
  }
  std::stable_sort(rows.begin(), rows.end(), [](const AggregateRow& a, const AggregateRow& b) {
    if (a.method != b.method) return static_cast<int>(a.method) < static_cast<int>(b.method);
    return false;
  });
  return rows;
}

std::vector<AggregateRow> bestRows(const ErrorReport& report) {
  std::vector<AggregateRow> best;
  for (const auto& row : aggregate(report)) {
    auto it = std::find_if(best.begin(), best.end(), [&](const AggregateRow& b) {
      return b.method == row.method && b.trainingSize == row.trainingSize;
    });
    if (it == best.end())
      best.push_back(row);
    else if (row.count > 0 && (it->count == 0 || row.mean < it->mean))
      *it = row;
  }
  return best;
}

const AggregateRow& bestFor(const std::vector<AggregateRow>& best, Method method,
                            Eigen::Index trainingSize) {
  for (const auto& row : best)
    if (row.method == method && row.trainingSize == trainingSize) return row;
  throw InvalidArgument("bestFor: no row for " + std::string(toString(method)) + " at n_t = " +
                        std::to_string(trainingSize));
}

std::vector<SurfacePoint> surfaceFrom(const ErrorReport& report) {
  std::vector<SurfacePoint> out;
  for (const auto& row : aggregate(report)) {
    auto it = std::find_if(out.begin(), out.end(), [&](const SurfacePoint& p) {
      return p.method == row.method && p.trainingSize == row.trainingSize && p.alpha == row.alpha;
    });
    if (it == out.end())
      out.push_back({row.method, row.trainingSize, row.alpha, row.mean});
    else if (row.mean < it->meanError || std::isnan(it->meanError))
      it->meanError = row.mean;
  }
  return out;
}

std::vector<SurfacePoint> sweepHyperparameters(const ExperimentConfig& cfg, int parallelism) {
  return surfaceFrom(runExperiment(cfg, parallelism));
}

std::vector<ConvergenceRow> convergenceFrom(const ErrorReport& report) {
  const auto best = bestRows(report);
  std::vector<ConvergenceRow> out;
  for (const auto& row : best) {
    if (row.method == Method::Tikhonov) continue;
    const double tik = bestFor(best, Method::Tikhonov, row.trainingSize).mean;
    out.push_back({row.method, row.trainingSize, row.mean, tik, std::abs(row.mean - tik)});
  }
  return out;
}

ConvergenceReport convergenceStudy(const ExperimentConfig& cfg, int parallelism) {
  ExperimentConfig c = cfg;
  c.study = StudyKind::Convergence;
  c.validate();
  ConvergenceReport out;
  out.report = runExperiment(c, parallelism);
  out.rows = convergenceFrom(out.report);
  return out;
}

}  // namespace mcinv
