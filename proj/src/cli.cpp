#include "mcinv/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "mcinv/closed_form.hpp"
#include "mcinv/config.hpp"
#include "mcinv/csv_io.hpp"
#include "mcinv/error.hpp"
#include "mcinv/experiment.hpp"
#include "mcinv/losses.hpp"
#include "mcinv/optimizer.hpp"
#include "mcinv/rng.hpp"
#include "mcinv/stationarity.hpp"

namespace mcinv {

namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

fs::path defaultOutDir() {
  if (const char* env = std::getenv("MCINV_OUT_DIR"); env && *env) return env;
  return "mcinv-out";
}

// Collects what a run did and writes manifest.json next to its outputs.
class Run {
 public:
  Run(std::string subcommand, std::vector<std::string> argv)
      : start_(std::chrono::steady_clock::now()) {
    manifest_["tool"] = "mcinv";
    manifest_["version"] = kVersion;
    manifest_["subcommand"] = std::move(subcommand);
    manifest_["argv"] = std::move(argv);
    manifest_["status"] = "ok";
    manifest_["notes"] = Json::array();
    manifest_["outputs"] = Json::array();
  }

  void setOutDir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
    dir_ = dir;
  }
  const fs::path& outDir() const { return dir_; }
  bool hasOutDir() const { return !dir_.empty(); }

  void recordConfig(const ExperimentConfig& cfg) {
    const std::string text = toFlatText(cfg);
    std::istringstream in(text);
    Json obj = Json::object();
    const FlatConfig flat = FlatConfig::parse(in, "resolved");
    for (const auto& [key, entry] : flat.entries()) obj[key] = entry.value;
    manifest_["config"] = obj;
    writeTextFile(dir_ / "resolved.cfg", text);
    output(dir_ / "resolved.cfg");
  }

  void matrix(const std::string& name, const Matrix& m) {
    writeMatrixCsv(dir_ / name, m);
    output(dir_ / name);
  }
  void text(const std::string& name, const std::string& body) {
    writeTextFile(dir_ / name, body);
    output(dir_ / name);
  }
  void output(const fs::path& p) { manifest_["outputs"].push_back(p.filename().string()); }
  void note(std::string n) { manifest_["notes"].push_back(std::move(n)); }
  Json& operator[](const char* key) { return manifest_[key]; }

  void finish() {
    manifest_["duration_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    writeTextFile(dir_ / "manifest.json", manifest_.dump(2) + "\n");
  }

 private:
  std::chrono::steady_clock::time_point start_;
  fs::path dir_;
  Json manifest_;
};

struct CommonOptions {
  std::string config;
  std::string out;
};

void addCommon(CLI::App* sub, CommonOptions& o) {
  sub->add_option("--config", o.config, "flat key=value experiment config");
  sub->add_option("--out", o.out, "output directory (default $MCINV_OUT_DIR or ./mcinv-out)");
}

ExperimentConfig loadConfig(const CommonOptions& o) {
  if (o.config.empty()) return ExperimentConfig{};
  return loadExperimentConfig(o.config);
}

fs::path outDirOf(const CommonOptions& o) { return o.out.empty() ? defaultOutDir() : fs::path(o.out); }

struct DataOptions {
  std::string forward, trainU, trainY, priorPrecision, priorMean, obs, testU;
  std::optional<double> noiseSigma;
  std::optional<long> trainSize;
  int repetition = 0;
};

void addData(CLI::App* sub, DataOptions& d) {
  sub->add_option("--forward", d.forward, "forward matrix G (n x m CSV)");
  sub->add_option("--train-u", d.trainU, "training parameters (m x n_t CSV)");
  sub->add_option("--train-y", d.trainY, "training observations (n x n_t CSV)");
  sub->add_option("--prior-precision", d.priorPrecision, "prior precision (m x m CSV)");
  sub->add_option("--prior-mean", d.priorMean, "prior mean (m x 1 CSV)");
  sub->add_option("--noise-sigma", d.noiseSigma, "noise standard deviation for Lambda = sigma^2 I");
  sub->add_option("--obs", d.obs, "observations to invert (n x k CSV)");
  sub->add_option("--test-u", d.testU, "true parameters for --obs (m x k CSV)");
  sub->add_option("--train-size", d.trainSize, "training size for generated data")
      ->check(CLI::PositiveNumber);
  sub->add_option("--repetition", d.repetition, "random stream of generated data")
      ->check(CLI::NonNegativeNumber);
}

struct Data {
  ForwardOperator forward;
  TrainingSet train;
  GaussianPrior prior;
  NoiseModel noise;
  std::optional<Matrix> testY;
  std::optional<Matrix> testU;
};

bool usesFiles(const DataOptions& d) {
  return !d.forward.empty() || !d.trainU.empty() || !d.trainY.empty();
}

// Problem from CSV files, or a seeded draw from the config's generator.
Data resolveData(const ExperimentConfig& cfg, const DataOptions& d, Run& run) {
  if (!usesFiles(d)) {
    if (!d.priorPrecision.empty() || !d.priorMean.empty() || d.noiseSigma)
      throw InvalidArgument("--prior-precision, --prior-mean and --noise-sigma need --forward data");
    const Eigen::Index nt = d.trainSize ? *d.trainSize : cfg.trainingSizes.front();
    GaussianPrior prior = experimentPrior(cfg);
    ProblemInstance inst = drawInstance(cfg, prior, d.repetition, nt);
    run["data"] = {{"source", "generated"}, {"repetition", d.repetition}, {"train_size", nt},
                   {"noise_sigma", inst.train.sampleSigma}};
    Data out{std::move(inst.forward), std::move(inst.train.set), std::move(prior),
             std::move(inst.train.noise), std::move(inst.testData), std::move(inst.testParameters)};
    if (!d.obs.empty()) {
      out.testY = readMatrixCsv(d.obs);
      out.testU.reset();
      if (!d.testU.empty()) out.testU = readMatrixCsv(d.testU);
    }
    return out;
  }
  if (d.forward.empty() || d.trainU.empty() || d.trainY.empty())
    throw InvalidArgument("--forward, --train-u and --train-y must be given together");
  ForwardOperator fwd(readMatrixCsv(d.forward));
  TrainingSet ts(readMatrixCsv(d.trainU), readMatrixCsv(d.trainY));
  const Eigen::Index m = fwd.parameterDim();
  if (ts.parameterDim() != m || ts.dataDim() != fwd.observableDim())
    throw InvalidArgument("training matrices do not match the forward matrix dimensions");

  std::optional<GaussianPrior> prior;
  if (!d.priorPrecision.empty()) {
    Vector mean = Vector::Zero(m);
    if (!d.priorMean.empty()) {
      const Matrix pm = readMatrixCsv(d.priorMean);
      if (pm.cols() != 1 || pm.rows() != m) throw InvalidArgument("--prior-mean must be m x 1");
      mean = pm.col(0);
    }
    prior = GaussianPrior::fromPrecision(mean, readMatrixCsv(d.priorPrecision));
  } else {
    if (!d.priorMean.empty()) throw InvalidArgument("--prior-mean needs --prior-precision");
    prior = buildFEPrior(cfg.priorKind, m, cfg.priorScale, cfg.boundaryRelaxation);
    run.note("prior: config finite-element prior on a grid of " + std::to_string(m) + " points");
  }

  double sigma = 0.0;
  if (d.noiseSigma) {
    sigma = *d.noiseSigma;
  } else {
    const double peak = ts.data().cwiseAbs().maxCoeff();
    sigma = cfg.noise.fraction * peak;
    if (!(sigma > 0.0)) sigma = cfg.noise.weightFloor * peak;
    if (!(sigma > 0.0)) sigma = 1.0;
    run.note("noise sigma estimated from the training data: " + formatDouble(sigma));
  }
  run["data"] = {{"source", "files"},
                 {"forward", d.forward},
                 {"train_u", d.trainU},
                 {"train_y", d.trainY},
                 {"noise_sigma", sigma}};
  NoiseModel noise = NoiseModel::isotropic(ts.dataDim(), sigma);
  Data out{std::move(fwd), std::move(ts), std::move(*prior), std::move(noise), std::nullopt,
           std::nullopt};
  if (!d.obs.empty()) out.testY = readMatrixCsv(d.obs);
  if (!d.testU.empty()) out.testU = readMatrixCsv(d.testU);
  return out;
}

void checkObservations(const Data& data) {
  if (data.testY && data.testY->rows() != data.forward.observableDim())
    throw InvalidArgument("--obs must have one row per observation");
  if (data.testU && (!data.testY || data.testU->rows() != data.forward.parameterDim() ||
                     data.testU->cols() != data.testY->cols()))
    throw InvalidArgument("--test-u must be m x k matching --obs");
}

// predictions.csv plus per-case relative errors when the truth is known.
void writePredictions(Run& run, const Data& data, const Matrix& predicted) {
  run.matrix("predictions.csv", predicted);
  if (!data.testU) return;
  std::ostringstream os;
  os << "case,rel_error\n";
  double sum = 0.0;
  for (Eigen::Index j = 0; j < predicted.cols(); ++j) {
    const double e = relativeError(predicted.col(j), data.testU->col(j));
    sum += e;
    os << j << ',' << formatDouble(e) << '\n';
  }
  run.text("errors.csv", os.str());
  run["results"]["mean_rel_error"] = sum / static_cast<double>(predicted.cols());
}

void noteRank(Run& run, const TrainingSet& ts, double tol) {
  const auto stats = centeredStatistics(ts);
  const Eigen::Index rank = numericalRank(stats.centeredData, tol, stats.dataScale);
  run["results"]["centered_data_rank"] = rank;
  if (rank < ts.dataDim())
    run.note("centered training data has rank " + std::to_string(rank) + " < " +
             std::to_string(ts.dataDim()) +
             ": the learned map is not a pure regression and the reference parameter carries a "
             "model-correction term");
}

// ---- solve ---------------------------------------------------------------

struct SolveOptions {
  CommonOptions common;
  DataOptions data;
  std::string method = "mcdnn";
  double alpha = 1.0, alpha1 = 0.0, alpha2 = 0.0;
};

int runSolve(const SolveOptions& o, Run& run, std::ostream& out) {
  const ExperimentConfig cfg = loadConfig(o.common);
  run.setOutDir(outDirOf(o.common));
  run.recordConfig(cfg);
  const Data data = resolveData(cfg, o.data, run);
  checkObservations(data);
  run["method"] = o.method;
  run["hyperparameters"] = {{"alpha", o.alpha}, {"alpha1", o.alpha1}, {"alpha2", o.alpha2}};
  run["tolerances"] = {{"pinv", cfg.pinvTolerance}};

  if (o.method == "tikhonov") {
    if (!data.testY) throw InvalidArgument("tikhonov needs observations (--obs)");
    writePredictions(run, data,
                     tikhonovSolveColumns(data.forward, data.noise, data.prior, o.alpha, *data.testY,
                                          data.prior.mean()));
    run.finish();
    out << "tikhonov: " << data.testY->cols() << " inversions written to " << run.outDir().string() << "\n";
    return kExitOk;
  }

  AffineMap map;
  if (o.method == "ndnn")
    map = solveNDNNClosedForm(data.train, o.alpha1, o.alpha2, cfg.pinvTolerance);
  else if (o.method == "mcdnn")
    map = solveMCDNNClosedForm(data.train, data.forward, data.prior, data.noise, o.alpha,
                               cfg.pinvTolerance);
  else if (o.method == "mcdnn_unweighted")
    map = solveMCDNNUnweighted(data.train, data.forward, o.alpha, cfg.pinvTolerance);
  else
    throw InvalidArgument("unknown method '" + o.method + "'");
  noteRank(run, data.train, cfg.pinvTolerance);
  run.matrix("weight.csv", map.weight);
  run.matrix("bias.csv", map.bias);

  if (data.testY) {
    writePredictions(run, data, predictColumns(map, *data.testY));
    if (o.method == "mcdnn") {
      Matrix u0(data.forward.parameterDim(), data.testY->cols());
      for (Eigen::Index j = 0; j < u0.cols(); ++j)
        u0.col(j) = referenceParameter(data.train, data.forward, data.prior, data.noise, o.alpha,
                                       data.testY->col(j), cfg.pinvTolerance);
      run.matrix("reference_parameters.csv", u0);
    }
  }
  run.finish();
  out << o.method << ": " << map.weight.rows() << "x" << map.weight.cols() << " map written to "
      << run.outDir().string() << "\n";
  return kExitOk;
}

// ---- train ---------------------------------------------------------------

struct TrainOptions {
  CommonOptions common;
  DataOptions data;
  std::string loss = "mcdnn";
  std::string arch;
  Hyperparameters hp;
  std::optional<std::uint64_t> seed;
  OptimizerConfig opt;
};

std::string traceCsv(const std::vector<TraceEntry>& trace) {
  std::ostringstream os;
  os << "iteration,loss,grad_norm\n";
  for (const auto& t : trace)
    os << t.iteration << ',' << formatDouble(t.loss) << ',' << formatDouble(t.gradNorm) << '\n';
  return os.str();
}

int runTrain(const TrainOptions& o, Run& run, std::ostream& out) {
  const ExperimentConfig cfg = loadConfig(o.common);
  o.hp.validate();
  o.opt.validate();
  const LossKind kind = lossKindFromString(o.loss);
  const auto hidden = parseArchitecture(o.arch);
  run.setOutDir(outDirOf(o.common));
  run.recordConfig(cfg);
  Data data = resolveData(cfg, o.data, run);
  checkObservations(data);

  const std::uint64_t seed = o.seed ? *o.seed : cfg.masterSeed;
  const Eigen::Index m = data.forward.parameterDim();
  const Eigen::Index n = data.forward.observableDim();
  run["loss"] = o.loss;
  run["architecture"] = formatArchitecture(hidden);
  run["hyperparameters"] = {{"alpha", o.hp.alpha}, {"alpha1", o.hp.alpha1}, {"alpha2", o.hp.alpha2},
                            {"beta", o.hp.beta}};
  run["seeds"] = {{"init", seed}, {"master", cfg.masterSeed}};
  run["tolerances"] = {{"grad", o.opt.gradTolerance}, {"armijo", o.opt.armijo}};
  run["optimizer"] = {{"step", o.opt.stepSize},
                      {"momentum", o.opt.momentum},
                      {"max_iterations", o.opt.maxIterations}};

  Problem problem{data.train, data.forward, data.prior, data.noise, o.hp};
  std::optional<Objective> objective;
  if (!isAutoencoderLoss(kind)) {
    objective.emplace(kind, problem, DenseNetwork::initialize(n, hidden, m, seed));
  } else {
    // Decoder forms encode U into the observation space; the encoder form
    // encodes Y into the parameter space.
    const bool fromParameters = kind != LossKind::MCEncoder;
    const Eigen::Index a = fromParameters ? m : n;
    const Eigen::Index b = fromParameters ? n : m;
    objective.emplace(kind, problem,
                      AutoencoderParams(DenseNetwork::initialize(a, hidden, b, streamSeed(seed, 0)),
                                        DenseNetwork::initialize(b, hidden, a, streamSeed(seed, 1))));
  }

  OptimizationResult result;
  try {
    result = minimize(*objective, objective->initialParameters(), o.opt);
  } catch (const DivergenceError& e) {
    run.text("trace.csv", traceCsv(e.trace()));
    run["status"] = "diverged";
    run.note(e.what());
    run.finish();
    throw;
  }
  run.matrix("params.csv", result.parameters);
  run.text("trace.csv", traceCsv(result.trace));
  run["results"] = {{"loss", result.loss},
                    {"grad_norm", result.gradNorm},
                    {"iterations", result.iterations},
                    {"converged", result.converged}};

  std::optional<DenseNetwork> inverseMap;
  if (objective->network()) {
    inverseMap = objective->network()->withParameters({result.parameters.data(), static_cast<std::size_t>(result.parameters.size())});
  } else {
    const auto ae = objective->autoencoder()->withParameters({result.parameters.data(), static_cast<std::size_t>(result.parameters.size())});
    inverseMap = kind == LossKind::MCEncoder ? ae.encoder : ae.decoder;
  }
  if (inverseMap->isSingleLinearLayer()) {
    run.matrix("weight.csv", inverseMap->layers().front().weight);
    run.matrix("bias.csv", inverseMap->layers().front().bias);
  }
  if (data.testY) writePredictions(run, data, inverseMap->forward(*data.testY));
  run.finish();
  out << o.loss << ": loss " << formatDouble(result.loss) << ", |grad| "
      << formatDouble(result.gradNorm) << " after " << result.iterations << " iterations"
      << (result.converged ? "" : " (iteration limit)") << "\n";
  return kExitOk;
}

// ---- certify -------------------------------------------------------------

std::string csvField(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

int runCertify(const CommonOptions& common, std::optional<std::uint64_t> seedOpt, Run& run,
               std::ostream& out) {
  const ExperimentConfig cfg = loadConfig(common);
  const std::uint64_t seed = seedOpt ? *seedOpt : cfg.masterSeed;
  run.setOutDir(outDirOf(common));
  run["seeds"] = {{"certify", seed}};
  run["tolerances"] = {{"finite_difference_step", kFiniteDifferenceStep}};

  const auto certs = certifyAll(seed);
  std::ostringstream csv, summary;
  csv << "loss_kind,construction,grad_norm,loss,pass,fd_grad_norm,scale_reference,"
         "relative_grad_norm,tolerance,expectation,as_expected,notes\n";
  int unexpected = 0;
  for (const auto& c : certs) {
    csv << toString(c.kind) << ',' << csvField(c.construction) << ',' << formatDouble(c.gradNorm)
        << ',' << formatDouble(c.loss) << ',' << (c.pass ? 1 : 0) << ','
        << formatDouble(c.fdGradNorm) << ',' << formatDouble(c.scaleReference) << ','
        << formatDouble(c.relativeGradNorm) << ',' << formatDouble(c.tolerance) << ','
        << toString(c.expectation) << ',' << (c.asExpected() ? 1 : 0) << ',' << csvField(c.notes)
        << '\n';
    if (!c.asExpected()) ++unexpected;
    summary << (c.asExpected() ? "ok      " : "UNEXPECTED ") << toString(c.kind) << " / "
            << c.construction << ": relative |grad| " << formatDouble(c.relativeGradNorm) << " ("
            << toString(c.expectation) << ", tol " << formatDouble(c.tolerance) << ")\n";
  }
  summary << certs.size() - static_cast<std::size_t>(unexpected) << "/" << certs.size()
          << " certificates as expected\n";
  run.text("certificates.csv", csv.str());
  run.text("summary.txt", summary.str());
  run["results"] = {{"certificates", certs.size()}, {"unexpected", unexpected}};
  if (unexpected) run["status"] = "unexpected-certificates";
  run.finish();
  out << summary.str();
  return unexpected ? kExitFailure : kExitOk;
}

// ---- bench ---------------------------------------------------------------

int runBench(const CommonOptions& common, int parallelism, Run& run, std::ostream& out) {
  if (common.config.empty()) throw InvalidArgument("bench needs --config");
  const ExperimentConfig cfg = loadConfig(common);
  run.setOutDir(outDirOf(common));
  run.recordConfig(cfg);
  run["seeds"] = {{"master", cfg.masterSeed}};
  run["tolerances"] = {{"pinv", cfg.pinvTolerance}};
  run["parallelism"] = parallelism;

  ErrorReport report;
  std::vector<ConvergenceRow> convergence;
  if (cfg.study == StudyKind::Convergence) {
    auto study = convergenceStudy(cfg, parallelism);
    report = std::move(study.report);
    convergence = std::move(study.rows);
  } else {
    report = runExperiment(cfg, parallelism);
  }
  for (const auto& p : emitReport(report, run.outDir(), convergence)) run.output(p);

  int failed = 0;
  for (const auto& r : report.records) failed += r.failed ? 1 : 0;
  if (failed) run.note(std::to_string(failed) + " fits failed and are marked in results.csv");
  run["results"] = {{"records", report.records.size()}, {"failed", failed}};
  run.finish();

  out << "best mean relative error (" << toString(cfg.priorKind) << " prior)\n";
  for (const auto& r : bestRows(report))
    out << "  " << toString(r.method) << " n_t=" << r.trainingSize << ": " << formatDouble(r.mean)
        << "\n";
  return kExitOk;
}

// ---- generate ------------------------------------------------------------

int runGenerate(const CommonOptions& common, const DataOptions& d, Run& run, std::ostream& out) {
  if (usesFiles(d)) throw InvalidArgument("generate draws its own data; drop the data file flags");
  const ExperimentConfig cfg = loadConfig(common);
  run.setOutDir(outDirOf(common));
  run.recordConfig(cfg);
  const Eigen::Index nt = d.trainSize ? *d.trainSize : cfg.trainingSizes.front();
  const GaussianPrior prior = experimentPrior(cfg);
  const ProblemInstance inst = drawInstance(cfg, prior, d.repetition, nt);
  Matrix idx(static_cast<Eigen::Index>(inst.indices.size()), 1);
  for (std::size_t i = 0; i < inst.indices.size(); ++i)
    idx(static_cast<Eigen::Index>(i), 0) = static_cast<double>(inst.indices[i]);
  run.matrix("forward.csv", inst.forward.matrix());
  run.matrix("obs_indices.csv", idx);
  run.matrix("train_u.csv", inst.train.set.parameters());
  run.matrix("train_y.csv", inst.train.set.data());
  run.matrix("test_u.csv", inst.testParameters);
  run.matrix("test_y.csv", inst.testData);
  run.matrix("prior_precision.csv", prior.precision());
  run.matrix("prior_mean.csv", prior.mean());
  run["seeds"] = {{"master", cfg.masterSeed}, {"repetition", d.repetition}};
  run["results"] = {{"noise_sigma", inst.train.sampleSigma}};
  run.finish();
  out << "problem with " << nt << " training pairs written to " << run.outDir().string() << "\n";
  return kExitOk;
}

// ---- replay --------------------------------------------------------------

int runReplay(const std::string& manifestPath, const std::string& outOverride, std::ostream& out,
              std::ostream& err) {
  std::ifstream in(manifestPath);
  if (!in) throw ParseError("cannot open manifest '" + manifestPath + "'");
  Json m;
  try {
    m = Json::parse(in);
  } catch (const Json::exception& e) {
    throw ParseError(manifestPath + ": " + e.what());
  }
  if (!m.contains("argv") || !m["argv"].is_array())
    throw ParseError(manifestPath + ": missing argv");
  std::vector<std::string> args = m["argv"].get<std::vector<std::string>>();
  if (args.empty() || args.front() == "replay") throw ParseError(manifestPath + ": nothing to replay");

  // Strip the original --config/--out and point at the recorded config.
  std::vector<std::string> next;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a == "--config" || a == "--out") {
      ++i;
      continue;
    }
    if (a.rfind("--config=", 0) == 0 || a.rfind("--out=", 0) == 0) continue;
    next.push_back(a);
  }
  const fs::path dir = outOverride.empty() ? defaultOutDir() : fs::path(outOverride);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  if (m.contains("config")) {
    std::ostringstream cfgText;
    for (const auto& [key, value] : m["config"].items()) cfgText << key << " = " << value.get<std::string>() << "\n";
    const fs::path cfgPath = dir / "replay-input.cfg";
    writeTextFile(cfgPath, cfgText.str());
    next.push_back("--config");
    next.push_back(cfgPath.string());
  }
  next.push_back("--out");
  next.push_back(dir.string());
  return runCli(next, out, err);
}

int exitCodeFor(const std::exception& e) {
  if (dynamic_cast<const ParseError*>(&e) || dynamic_cast<const InvalidArgument*>(&e))
    return kExitUsage;
  return kExitFailure;
}

}  // namespace

int runCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Model-constrained learned inverse maps: closed forms, training, certification, "
               "deconvolution benchmark"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  SolveOptions solveOpt;
  auto* solve = app.add_subcommand("solve", "closed-form affine inverse map or Tikhonov inversion");
  addCommon(solve, solveOpt.common);
  addData(solve, solveOpt.data);
  solve->add_option("--method", solveOpt.method, "ndnn | mcdnn | mcdnn_unweighted | tikhonov")
      ->check(CLI::IsMember({"ndnn", "mcdnn", "mcdnn_unweighted", "tikhonov"}));
  solve->add_option("--alpha", solveOpt.alpha, "model-misfit / Tikhonov weight")->check(CLI::PositiveNumber);
  solve->add_option("--alpha1", solveOpt.alpha1, "nDNN weight penalty")->check(CLI::NonNegativeNumber);
  solve->add_option("--alpha2", solveOpt.alpha2, "nDNN bias penalty")->check(CLI::NonNegativeNumber);

  TrainOptions trainOpt;
  auto* train = app.add_subcommand("train", "gradient-based training of a network for one loss");
  addCommon(train, trainOpt.common);
  addData(train, trainOpt.data);
  train->add_option("--loss", trainOpt.loss, "ndnn | mcdnn | mcdecoder | mcdecodervar | mcencoder")
      ->check(CLI::IsMember({"ndnn", "mcdnn", "mcdecoder", "mcdecodervar", "mcencoder"}));
  train->add_option("--arch", trainOpt.arch, "hidden layers, e.g. 16:tanh,8:softplus (empty = linear)");
  train->add_option("--alpha", trainOpt.hp.alpha);
  train->add_option("--alpha1", trainOpt.hp.alpha1);
  train->add_option("--alpha2", trainOpt.hp.alpha2);
  train->add_option("--beta", trainOpt.hp.beta);
  train->add_option("--seed", trainOpt.seed, "initialization seed (default: master_seed)");
  train->add_option("--max-iters", trainOpt.opt.maxIterations);
  train->add_option("--tol", trainOpt.opt.gradTolerance, "stop when |grad| falls below this");
  train->add_option("--step", trainOpt.opt.stepSize, "initial trial step");
  train->add_option("--momentum", trainOpt.opt.momentum);
  train->add_option("--log-every", trainOpt.opt.logEvery);

  CommonOptions certifyOpt;
  std::optional<std::uint64_t> certifySeed;
  auto* certify = app.add_subcommand("certify", "stationarity certificates of the closed-form candidates");
  addCommon(certify, certifyOpt);
  certify->add_option("--seed", certifySeed, "fixture seed (default: master_seed)");
  certify->add_flag("--all", "run the whole suite (the default)");

  CommonOptions benchOpt;
  int parallelism = 1;
  auto* bench = app.add_subcommand("bench", "deconvolution benchmark sweep or convergence study");
  addCommon(bench, benchOpt);
  bench->add_option("--parallelism", parallelism, "OpenMP threads over repetitions")
      ->check(CLI::PositiveNumber);

  CommonOptions generateOpt;
  DataOptions generateData;
  auto* generate = app.add_subcommand("generate", "write one seeded deconvolution problem as CSV");
  addCommon(generate, generateOpt);
  generate->add_option("--train-size", generateData.trainSize)->check(CLI::PositiveNumber);
  generate->add_option("--repetition", generateData.repetition)->check(CLI::NonNegativeNumber);

  std::string manifestPath, replayOut;
  auto* replay = app.add_subcommand("replay", "re-run the command recorded in a manifest");
  replay->add_option("manifest", manifestPath, "manifest.json of an earlier run")->required();
  replay->add_option("--out", replayOut, "output directory");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err) == 0 ? kExitOk : kExitUsage;
  } catch (const CLI::CallForVersion& e) {
    app.exit(e, out, err);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  Run run(chosen->get_name(), args);
  try {
    if (chosen == solve) return runSolve(solveOpt, run, out);
    if (chosen == train) return runTrain(trainOpt, run, out);
    if (chosen == certify) return runCertify(certifyOpt, certifySeed, run, out);
    if (chosen == bench) return runBench(benchOpt, parallelism, run, out);
    if (chosen == generate) return runGenerate(generateOpt, generateData, run, out);
    if (chosen == replay) return runReplay(manifestPath, replayOut, out, err);
  } catch (const std::exception& e) {
    err << "mcinv " << chosen->get_name() << ": " << e.what() << "\n";
    if (run.hasOutDir() && chosen != replay) {
      try {
        if (run["status"] == "ok") run["status"] = "failed";
        run["error"] = e.what();
        run.finish();
      } catch (const std::exception&) {
        // the diagnostic above is all we can offer
      }
    }
    return exitCodeFor(e);
  }
  return kExitUsage;
}

}  // namespace mcinv
