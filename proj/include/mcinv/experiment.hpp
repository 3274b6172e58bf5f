#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "mcinv/linalg.hpp"
#include "mcinv/model.hpp"

namespace mcinv {

/// `count` log-spaced points from lo to hi inclusive.
std::vector<double> logspace(double lo, double hi, int count);

enum class StudyKind { Sweep, Convergence };

std::string_view toString(StudyKind kind);
StudyKind studyKindFromString(std::string_view s);

/// One deconvolution study: problem setup, sweep sizes, hyperparameter grids.
struct ExperimentConfig {
  Eigen::Index gridSize = 200;
  double kernelWidth = 0.03;  // on the unit interval
  Eigen::Index obsCount = 10;
  NoiseSpec noise{};
  PriorKind priorKind = PriorKind::Dirichlet;
  double priorScale = 1.0;
  double boundaryRelaxation = 1.0;
  std::vector<Eigen::Index> trainingSizes{30, 60, 90, 120, 150};
  Eigen::Index testSize = 50;
  int repetitions = 100;
  std::vector<double> alphaGrid = logspace(1e-4, 1e4, 20);
  std::vector<double> ndnnGrid = logspace(1e-4, 1e4, 5);  // shared by alpha1 and alpha2
  std::uint64_t masterSeed = 2021;
  bool fixedIndices = false;  // one set of observation points for all repetitions
  double pinvTolerance = kPinvTolerance;
  StudyKind study = StudyKind::Sweep;

  void validate() const;
};

enum class Method { NDNN, MCDNNUnweighted, MCDNN, Tikhonov };

inline constexpr Method kAllMethods[] = {Method::NDNN, Method::MCDNNUnweighted, Method::MCDNN,
                                         Method::Tikhonov};

std::string_view toString(Method method);

/// Mean relative test error of one fitted method in one repetition.
struct ErrorRecord {
  Method method = Method::NDNN;
  Eigen::Index trainingSize = 0;
  double alpha = 0.0;   // alpha1 for nDNN
  double alpha2 = 0.0;  // nDNN only
  int repetition = 0;
  double relError = 0.0;
  bool failed = false;
};

struct AggregateRow {
  Method method = Method::NDNN;
  Eigen::Index trainingSize = 0;
  double alpha = 0.0;
  double alpha2 = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation over repetitions
  double min = 0.0;
  double max = 0.0;
  int count = 0;   // successful repetitions
  int failed = 0;
};

struct ErrorReport {
  PriorKind priorKind = PriorKind::Dirichlet;
  std::vector<ErrorRecord> records;
};

/// ||uHat - uStar|| / ||uStar||. Throws UndefinedMetric for uStar = 0.
double relativeError(const Vector& uHat, const Vector& uStar);

/// One seeded deconvolution problem: observation points, blur operator,
/// nested training pool and test pairs, all drawn from the streams of
/// repetition `r`.
struct ProblemInstance {
  std::vector<Eigen::Index> indices;
  ForwardOperator forward;
  GeneratedData train;
  Matrix testParameters;
  Matrix testData;
};

ProblemInstance drawInstance(const ExperimentConfig& cfg, const GaussianPrior& prior, int r,
                             Eigen::Index trainingCount);

/// The config's finite-element prior on its grid.
GaussianPrior experimentPrior(const ExperimentConfig& cfg);

/// Records of repetition `r`: sizes in config order, then methods, then grid.
/// Every random draw is keyed by (master seed, r, purpose).
std::vector<ErrorRecord> runRepetition(const ExperimentConfig& cfg, const GaussianPrior& prior,
                                       int r);

/// Serial reference runner.
ErrorReport runExperimentSerial(const ExperimentConfig& cfg);
/// Repetitions spread over `threads` OpenMP threads; identical output to the
/// serial runner.
ErrorReport runExperimentParallel(const ExperimentConfig& cfg, int threads);
/// Serial for parallelism <= 1.
ErrorReport runExperiment(const ExperimentConfig& cfg, int parallelism = 1);

/// Per (method, size, hyperparameter point), ordered by method, size, grid.
std::vector<AggregateRow> aggregate(const ErrorReport& report);
/// Swept-optimal row per (method, size): smallest mean, first in grid order on ties.
std::vector<AggregateRow> bestRows(const ErrorReport& report);
const AggregateRow& bestFor(const std::vector<AggregateRow>& best, Method method,
                            Eigen::Index trainingSize);

/// Error surface over (training size, alpha). For nDNN alpha is alpha1 and the
/// value is the minimum over alpha2.
struct SurfacePoint {
  Method method = Method::NDNN;
  Eigen::Index trainingSize = 0;
  double alpha = 0.0;
  double meanError = 0.0;
};

std::vector<SurfacePoint> surfaceFrom(const ErrorReport& report);
std::vector<SurfacePoint> sweepHyperparameters(const ExperimentConfig& cfg, int parallelism = 1);

/// |best error(method) - best error(Tikhonov)| per method and size.
struct ConvergenceRow {
  Method method = Method::NDNN;
  Eigen::Index trainingSize = 0;
  double bestError = 0.0;
  double tikhonovError = 0.0;
  double gap = 0.0;
};

std::vector<ConvergenceRow> convergenceFrom(const ErrorReport& report);

struct ConvergenceReport {
  ErrorReport report;
  std::vector<ConvergenceRow> rows;
};

/// Requires strictly increasing training sizes.
ConvergenceReport convergenceStudy(const ExperimentConfig& cfg, int parallelism = 1);

/// Writes results.csv, aggregate.csv, best.csv, surface.csv and report.svg
/// (plus convergence.csv when `convergence` is non-empty) into `dir`.
/// Returns the written paths. Byte-stable for identical input.
std::vector<std::filesystem::path> emitReport(const ErrorReport& report,
                                              const std::filesystem::path& dir,
                                              const std::vector<ConvergenceRow>& convergence = {});

}  // namespace mcinv
