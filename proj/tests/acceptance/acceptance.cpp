// Acceptance suite: one verdict line per criterion. Tolerances and runtime
// budgets are pinned below; detail lines are indented.

#include <CLI11.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "mcinv/closed_form.hpp"
#include "mcinv/csv_io.hpp"
#include "mcinv/losses.hpp"
#include "mcinv/optimizer.hpp"
#include "mcinv/stationarity.hpp"
#include "test_support.hpp"

using namespace mcinv;
using namespace mcinv::testing;
namespace fs = std::filesystem;

namespace {

constexpr double kCorollaryTol = 1e-8;
constexpr double kClosedFormStationarityTol = 1e-6;
constexpr double kOptimizerRecoveryTol = 1e-4;
constexpr double kGradientTol = 1e-5;
constexpr double kZeroLoss = 1e-20;
constexpr double kDecoderCertificateTol = 1e-8;
constexpr double kEncoderCertificateTol = 1e-6;
constexpr double kConsistencyTol = 1e-8;
constexpr int kBenchmarkRepetitions = 20;

struct Verdict {
  bool pass = false;
  std::string summary;
};

struct Criterion {
  int id;
  const char* name;
  double budgetSeconds;
  std::function<Verdict()> run;
};

std::string fmt(double v) { return formatDouble(v); }

struct Context {
  std::string cli;
  fs::path work;
};

Context ctx;

fs::path workDir(const std::string& name) {
  const fs::path dir = ctx.work / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

int runCli(const std::vector<std::string>& args, const fs::path& log) {
  std::string cmd = "\"" + ctx.cli + "\"";
  for (const auto& a : args) cmd += " \"" + a + "\"";
  cmd += " > \"" + log.string() + "\" 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

// best.csv: prior,method,n_train,alpha,alpha2,mean,...
std::map<std::pair<std::string, long>, double> readBest(const fs::path& p) {
  std::map<std::pair<std::string, long>, double> out;
  std::istringstream in(slurp(p));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() < 6) continue;
    out[{f[1], std::stol(f[2])}] = parseDouble(f[5], "mean");
  }
  return out;
}

// convergence.csv: method,n_train,best_error,tikhonov_error,gap
std::map<std::pair<std::string, long>, double> readGaps(const fs::path& p) {
  std::map<std::pair<std::string, long>, double> out;
  std::istringstream in(slurp(p));
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    if (f.size() < 5) continue;
    out[{f[0], std::stol(f[1])}] = parseDouble(f[4], "gap");
  }
  return out;
}

struct LinearInstance {
  Matrix g;
  TrainingSet ts;
  GaussianPrior prior;
  NoiseModel noise;
};

LinearInstance randomLinear(Rng& rng, Eigen::Index m, Eigen::Index n, Eigen::Index nt) {
  Matrix g = rng.normalMatrix(n, m);
  const Matrix u = rng.normalMatrix(m, nt);
  TrainingSet ts(u, g * u + 0.1 * rng.normalMatrix(n, nt));
  GaussianPrior prior = GaussianPrior::fromCovariance(rng.normalMatrix(m, 1), randomSpd(rng, m));
  NoiseModel noise = NoiseModel::fromCovariance(randomSpd(rng, n));
  return {std::move(g), std::move(ts), std::move(prior), std::move(noise)};
}

Problem consistentProblem(const Matrix& g, const Matrix& u) {
  Problem p{TrainingSet(u, g * u), ForwardOperator(g), std::nullopt, std::nullopt, {}};
  p.hp.alpha = 0.7;
  p.hp.beta = 1.3;
  return p;
}

// ---- 1 ---------------------------------------------------------------------

Verdict corollary() {
  Rng rng(101);
  const double alphas[] = {0.1, 1.0, 10.0};
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const Eigen::Index m = 2 + k % 19, n = 1 + (k * 7) % 10, nt = 2 + (k * 13) % 29;
    const LinearInstance inst = randomLinear(rng, m, n, nt);
    const double alpha = alphas[k % 3];
    const ForwardOperator fwd(inst.g);
    const AffineMap map = solveMCDNNClosedForm(inst.ts, fwd, inst.prior, inst.noise, alpha);
    const Vector y = rng.normalMatrix(n, 1);
    const Vector u0 = referenceParameter(inst.ts, fwd, inst.prior, inst.noise, alpha, y);
    const Vector tik = tikhonovSolve(fwd, inst.noise, inst.prior, alpha, y, u0);
    worst = std::max(worst, relNorm(predict(map, y), tik));
  }
  return {worst < kCorollaryTol, "100 instances, worst relative difference " + fmt(worst) +
                                     " (tol " + fmt(kCorollaryTol) + ")"};
}

// ---- 2 ---------------------------------------------------------------------

Verdict closedFormStationarity() {
  Rng rng(202);
  double worstN = 0.0, worstM = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Eigen::Index m = 2 + k % 6, n = 1 + k % 4, nt = 3 + k % 9;
    const LinearInstance inst = randomLinear(rng, m, n, nt);
    const double a1 = 0.05 * (k + 1), a2 = 0.02 * k, alpha = 0.1 + 0.5 * k;
    auto relFd = [](const Objective& obj) {
      const Vector theta = obj.initialParameters();
      const Vector fd =
          centralDifference([&](const Vector& t) { return obj.value(t); }, theta, 1e-5);
      return fd.norm() / (1.0 + obj.value(theta));
    };
    Problem pn{inst.ts, ForwardOperator(inst.g), std::nullopt, std::nullopt, {a1, a2, 0, 0}};
    worstN = std::max(worstN, relFd(Objective(LossKind::NDNN, pn,
                                              DenseNetwork::affine(solveNDNNClosedForm(inst.ts, a1, a2)))));
    Problem pm{inst.ts, ForwardOperator(inst.g), inst.prior, inst.noise, {0, 0, alpha, 0}};
    const AffineMap wi = solveMCDNNClosedForm(inst.ts, pm.forward, inst.prior, inst.noise, alpha);
    worstM = std::max(worstM, relFd(Objective(LossKind::MCDNN, pm, DenseNetwork::affine(wi))));
  }
  const bool pass = worstN < kClosedFormStationarityTol && worstM < kClosedFormStationarityTol;
  return {pass, "20 instances, worst |fd grad|/(1+loss): ndnn " + fmt(worstN) + ", mcdnn " +
                    fmt(worstM) + " (tol " + fmt(kClosedFormStationarityTol) + ")"};
}

// ---- 3 ---------------------------------------------------------------------

Verdict optimizerRecovery() {
  Rng rng(303);
  double worstN = 0.0, worstM = 0.0;
  bool converged = true;
  const OptimizerConfig cfg;
  for (int k = 0; k < 5; ++k) {
    const Eigen::Index m = 3 + k % 3, n = 2 + k % 2, nt = 6 + k;
    const LinearInstance inst = randomLinear(rng, m, n, nt);
    const double a1 = 0.2 + 0.1 * k, a2 = 0.1, alpha = 0.5 + k;

    Problem pn{inst.ts, ForwardOperator(inst.g), std::nullopt, std::nullopt, {a1, a2, 0, 0}};
    const Objective on(LossKind::NDNN, pn, DenseNetwork::initialize(n, {}, m, 10 + k));
    const auto rn = minimize(on, on.initialParameters(), cfg);
    converged &= rn.converged;
    worstN = std::max(worstN, relNorm(rn.parameters,
                                      DenseNetwork::affine(solveNDNNClosedForm(inst.ts, a1, a2)).flatten()));

    Problem pm{inst.ts, ForwardOperator(inst.g), inst.prior, inst.noise, {0, 0, alpha, 0}};
    const Objective om(LossKind::MCDNN, pm, DenseNetwork::initialize(n, {}, m, 20 + k));
    const auto rm = minimize(om, om.initialParameters(), cfg);
    converged &= rm.converged;
    const AffineMap wi = solveMCDNNClosedForm(inst.ts, pm.forward, inst.prior, inst.noise, alpha);
    worstM = std::max(worstM, relNorm(rm.parameters, DenseNetwork::affine(wi).flatten()));
  }
  const bool pass = converged && worstN < kOptimizerRecoveryTol && worstM < kOptimizerRecoveryTol;
  return {pass, "5 instances, worst relative parameter error: ndnn " + fmt(worstN) + ", mcdnn " +
                    fmt(worstM) + " (tol " + fmt(kOptimizerRecoveryTol) + ")" +
                    (converged ? "" : ", optimizer did not converge")};
}

// ---- 4 ---------------------------------------------------------------------

Verdict gradients() {
  Rng rng(404);
  const LayerSpec tanhNet[] = {{5, Activation::Tanh}};
  const LayerSpec deep[] = {{4, Activation::Tanh}, {3, Activation::Softplus}};
  const LossKind kinds[] = {LossKind::NDNN, LossKind::MCDNN, LossKind::MCDecoder,
                            LossKind::MCDecoderVar, LossKind::MCEncoder};
  double worst = 0.0;
  for (int k = 0; k < 20; ++k) {
    const Eigen::Index m = 2 + k % 5, n = 1 + k % 4, nt = 3 + k % 6;
    const LinearInstance inst = randomLinear(rng, m, n, nt);
    Problem p{inst.ts, ForwardOperator(inst.g), inst.prior, inst.noise,
              {0.1 + 0.01 * k, 0.2, 0.3 + 0.1 * k, 0.5 + 0.05 * k}};
    std::span<const LayerSpec> hidden;
    if (k % 3 == 1) hidden = tanhNet;
    if (k % 3 == 2) hidden = deep;
    for (const LossKind kind : kinds) {
      const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(k);
      const Objective obj = [&] {
        switch (kind) {
          case LossKind::NDNN:
          case LossKind::MCDNN: return Objective(kind, p, DenseNetwork::initialize(n, hidden, m, seed));
          case LossKind::MCEncoder:
            return Objective(kind, p, AutoencoderParams(DenseNetwork::initialize(n, hidden, m, seed),
                                                        DenseNetwork::initialize(m, hidden, n, seed + 1)));
          default:
            return Objective(kind, p, AutoencoderParams(DenseNetwork::initialize(m, hidden, n, seed),
                                                        DenseNetwork::initialize(n, hidden, m, seed + 1)));
        }
      }();
      const Vector theta = rng.normalMatrix(obj.dim(), 1);
      const Vector fd = centralDifference([&](const Vector& t) { return obj.value(t); }, theta, 1e-5);
      worst = std::max(worst, (obj.gradient(theta) - fd).norm() / std::max(fd.norm(), 1e-12));
    }
  }
  return {worst < kGradientTol, "20 configurations x 5 losses, worst relative gradient error " +
                                    fmt(worst) + " (tol " + fmt(kGradientTol) + ")"};
}

// ---- 5 ---------------------------------------------------------------------

Verdict certificates() {
  Rng rng(505);
  double worstLoss = 0.0, worstDecoder = 0.0, worstEncoder = 0.0;
  int count = 0;
  auto zeroLossCert = [&](const StationarityCertificate& c) {
    worstLoss = std::max(worstLoss, c.loss);
    worstDecoder = std::max(worstDecoder, c.relativeGradNorm);
    ++count;
  };
  for (int k = 0; k < 5; ++k) {
    const std::uint64_t seed = 50 + static_cast<std::uint64_t>(k);
    // Decoder formulation: n >= m, consistent data.
    const Matrix tall = rng.normalMatrix(4 + k, 3);
    const Problem pd = consistentProblem(tall, rng.normalMatrix(3, 8));
    zeroLossCert(certifyStationarity(LossKind::MCDecoder,
                                     constructDecoderStationaryPoint(pd.forward).params, pd,
                                     kDecoderCertificateTol, "decoder", seed));
    // Variant, square invertible G.
    const Matrix square = rng.normalMatrix(4, 4) + 3.0 * Matrix::Identity(4, 4);
    const Problem ps = consistentProblem(square, rng.normalMatrix(4, 7));
    zeroLossCert(certifyStationarity(LossKind::MCDecoderVar,
                                     constructDecoderVarStationaryPoint(ps.forward).params, ps,
                                     kDecoderCertificateTol, "variant square", seed + 100));
    // Variant, n < m with U in range(Wd).
    const Matrix wide = rng.normalMatrix(3, 5 + k);
    const auto cw = constructDecoderVarStationaryPoint(ForwardOperator(wide));
    const Matrix& wd = cw.params.decoder.layers().front().weight;
    const Problem pw = consistentProblem(wide, wd * rng.normalMatrix(3, 8));
    zeroLossCert(certifyStationarity(LossKind::MCDecoderVar, cw.params, pw, kDecoderCertificateTol,
                                     "variant range(Wd)", seed + 200));
    // Encoder formulation, data-dependent right inverse.
    const Matrix ge = rng.normalMatrix(3, 6 + k);
    const Problem pe = consistentProblem(ge, rng.normalMatrix(6 + k, 12));
    const auto ce = constructEncoderStationaryPoint(pe.forward, pe.data);
    const auto cert = certifyStationarity(LossKind::MCEncoder, ce.params, pe, kEncoderCertificateTol,
                                          "encoder", seed + 300);
    worstEncoder = std::max(worstEncoder, cert.relativeGradNorm);
  }
  const bool pass = worstLoss < kZeroLoss && worstDecoder < kDecoderCertificateTol &&
                    worstEncoder < kEncoderCertificateTol;
  return {pass, std::to_string(count) + " decoder-side candidates: worst loss " + fmt(worstLoss) +
                    " (tol " + fmt(kZeroLoss) + "), worst certified |grad| " + fmt(worstDecoder) +
                    " (tol " + fmt(kDecoderCertificateTol) + "); 5 encoder candidates: worst " +
                    fmt(worstEncoder) + " (tol " + fmt(kEncoderCertificateTol) + ")"};
}

// ---- 6 ---------------------------------------------------------------------

Verdict consistencyEquivalence() {
  Rng rng(606);
  int consistent = 0, equivalent = 0;
  const int trials = 20;
  for (int k = 0; k < trials; ++k) {
    const Matrix ge = rng.normalMatrix(3, 6);
    const Problem pe = consistentProblem(ge, rng.normalMatrix(6, 10));
    const auto enc = constructEncoderStationaryPoint(pe.forward, pe.data).params.encoder;
    const Vector yObs = ge * rng.normalMatrix(6, 1);
    consistent += checkConsistent(enc.forward(yObs), pe.forward, yObs, kConsistencyTol);

    const Matrix gd = rng.normalMatrix(6, 3);
    const auto dec = constructDecoderStationaryPoint(ForwardOperator(gd)).params.decoder;
    const Vector uStar = rng.normalMatrix(3, 1);
    equivalent += checkEquivalent(dec.forward(gd * uStar), uStar, ForwardOperator(gd), kConsistencyTol);
  }
  return {consistent == trials && equivalent == trials,
          "encoder consistent " + std::to_string(consistent) + "/" + std::to_string(trials) +
              ", decoder equivalent " + std::to_string(equivalent) + "/" + std::to_string(trials) +
              " (tol " + fmt(kConsistencyTol) + ")"};
}

// ---- 7 ---------------------------------------------------------------------

Verdict degenerateNDNN() {
  Rng rng(707);
  bool ok = true;
  for (int k = 0; k < 10; ++k) {
    const Eigen::Index m = 1 + k, n = 1 + (k * 3) % 7;
    const TrainingSet ts(rng.normalMatrix(m, 1), rng.normalMatrix(n, 1));
    const AffineMap map = solveNDNNClosedForm(ts, 0.0, 0.0);
    ok &= (map.weight.array() == 0.0).all();
    for (int j = 0; j < 5; ++j)
      ok &= predict(map, 10.0 * rng.normalMatrix(n, 1)) == Vector(ts.parameters().col(0));
  }
  return {ok, "10 single-sample sets: W0 exactly zero and prediction exactly u-bar: " +
                  std::string(ok ? "yes" : "no")};
}

// ---- 8 ---------------------------------------------------------------------

Verdict benchmarkClaim() {
  const fs::path dir = workDir("criterion-8");
  std::ostringstream detail;
  bool pass = true;
  for (const char* prior : {"dirichlet", "relaxed"}) {
    const fs::path cfg = dir / (std::string(prior) + ".cfg");
    std::ofstream(cfg) << "prior_kind = " << prior << "\nrepetitions = " << kBenchmarkRepetitions
                       << "\n";
    const fs::path out = dir / prior;
    if (runCli({"bench", "--config", cfg.string(), "--out", out.string()}, dir / (std::string(prior) + ".log")) != 0)
      return {false, std::string("bench failed for the ") + prior + " prior"};
    const auto best = readBest(out / "best.csv");
    for (const long nt : {30L, 60L}) {
      const double mc = best.at({"mcdnn", nt}), nd = best.at({"ndnn", nt});
      pass &= mc < nd;
      detail << prior << " n_t=" << nt << ": mcdnn " << fmt(mc) << (mc < nd ? " < " : " >= ")
             << "ndnn " << fmt(nd) << "; ";
    }
  }
  return {pass, detail.str() + std::to_string(kBenchmarkRepetitions) + " repetitions"};
}

// ---- 9 ---------------------------------------------------------------------

const char* kConvergenceConfig =
    "study = convergence\ntraining_sizes = 50, 200, 800\nnoise_fraction = 0\nrepetitions = 20\n";

Verdict convergenceTrend() {
  const fs::path dir = workDir("criterion-9");
  std::ofstream(dir / "convergence.cfg") << kConvergenceConfig;
  if (runCli({"bench", "--config", (dir / "convergence.cfg").string(), "--out", (dir / "out").string()},
             dir / "bench.log") != 0)
    return {false, "bench failed"};
  const auto gaps = readGaps(dir / "out" / "convergence.csv");
  bool pass = true;
  std::ostringstream detail;
  for (const char* method : {"ndnn", "mcdnn"}) {
    const double g50 = gaps.at({method, 50}), g200 = gaps.at({method, 200}), g800 = gaps.at({method, 800});
    pass &= g200 < g50 && g800 < g200;
    detail << method << " gaps " << fmt(g50) << " -> " << fmt(g200) << " -> " << fmt(g800) << "; ";
  }
  return {pass, detail.str() + "strict decrease required"};
}

// ---- 10 --------------------------------------------------------------------

std::vector<std::string> csvFiles(const fs::path& dir) {
  std::vector<std::string> out;
  for (const auto& e : fs::directory_iterator(dir))
    if ((e.path().extension() == ".csv" || e.path().extension() == ".cfg") &&
        e.path().filename() != "replay-input.cfg")  // replay's own input, not an output
      out.push_back(e.path().filename().string());
  std::sort(out.begin(), out.end());
  return out;
}

Verdict determinism() {
  const fs::path dir = workDir("criterion-10");
  std::ofstream(dir / "convergence.cfg") << kConvergenceConfig;
  std::ofstream(dir / "sweep.cfg") << "repetitions = 3\nprior_kind = relaxed\n";
  struct Command {
    std::string name;
    std::vector<std::string> args;
  };
  const std::vector<Command> commands = {
      {"bench-convergence", {"bench", "--config", (dir / "convergence.cfg").string()}},
      {"bench-sweep", {"bench", "--config", (dir / "sweep.cfg").string(), "--parallelism", "2"}},
      {"solve", {"solve", "--config", (dir / "sweep.cfg").string(), "--method", "mcdnn", "--alpha", "3"}},
      {"certify", {"certify", "--all"}},
  };
  int identical = 0, compared = 0;
  std::ostringstream detail;
  for (const auto& c : commands) {
    const fs::path first = dir / (c.name + "-1"), replayed = dir / (c.name + "-replay");
    auto args = c.args;
    args.insert(args.end(), {"--out", first.string()});
    if (runCli(args, dir / (c.name + ".log")) != 0) return {false, c.name + " failed"};
    if (runCli({"replay", (first / "manifest.json").string(), "--out", replayed.string()},
               dir / (c.name + "-replay.log")) != 0)
      return {false, c.name + " replay failed"};
    const auto files = csvFiles(first);
    bool same = files == csvFiles(replayed) && !files.empty();
    for (const auto& f : files) {
      ++compared;
      const bool eq = slurp(first / f) == slurp(replayed / f);
      identical += eq;
      same &= eq;
    }
    detail << c.name << (same ? " identical" : " DIFFERS") << "; ";
  }
  return {identical == compared && compared > 0,
          detail.str() + std::to_string(identical) + "/" + std::to_string(compared) +
              " files byte-identical after replay"};
}

const std::vector<Criterion> kCriteria = {
    {1, "mcDNN prediction equals Tikhonov at the reference parameter", 10, corollary},
    {2, "closed forms are stationary", 30, closedFormStationarity},
    {3, "optimizer recovers closed forms", 60, optimizerRecovery},
    {4, "analytic gradients match finite differences", 30, gradients},
    {5, "stationarity certificates", 30, certificates},
    {6, "consistency and equivalence", 10, consistencyEquivalence},
    {7, "degenerate nDNN", 1, degenerateNDNN},
    {8, "mcDNN beats nDNN at n_t in {30, 60}, both priors", 300, benchmarkClaim},
    {9, "gaps to Tikhonov shrink with training size", 300, convergenceTrend},
    {10, "replay reproduces CSV outputs byte for byte", 600, determinism},
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  int only = 0;
  app.add_option("--criterion", only, "run only this criterion (1-10)")->check(CLI::Range(1, 10));
  app.add_option("--cli", ctx.cli, "path to the mcinv executable")->required();
  std::string work = "acceptance-work";
  app.add_option("--work", work, "scratch directory");
  CLI11_PARSE(app, argc, argv);
  ctx.work = work;

  int failures = 0;
  for (const auto& c : kCriteria) {
    if (only && c.id != only) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool inBudget = secs < c.budgetSeconds;
    const bool pass = v.pass && inBudget;
    failures += !pass;
    std::ostringstream t;
    t.precision(3);
    t << secs;
    std::cout << "criterion " << c.id << ": " << (pass ? "PASS" : "FAIL") << "  " << c.name << " -- "
              << v.summary << " [" << t.str() << " s, budget " << c.budgetSeconds << " s"
              << (inBudget ? "" : ", OVER BUDGET") << "]" << std::endl;
  }
  return failures ? 1 : 0;
}
