#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "mcinv/csv_io.hpp"
#include "mcinv/error.hpp"
#include "mcinv/experiment.hpp"

namespace mcinv {

namespace {

namespace fs = std::filesystem;

std::string resultsCsv(const ErrorReport& report) {
  std::ostringstream os;
  os << "prior,method,n_train,alpha,alpha2,repetition,rel_error,failed\n";
  for (const auto& r : report.records)
    os << toString(report.priorKind) << ',' << toString(r.method) << ',' << r.trainingSize << ','
       << formatDouble(r.alpha) << ',' << formatDouble(r.alpha2) << ',' << r.repetition << ','
       << formatDouble(r.relError) << ',' << (r.failed ? 1 : 0) << '\n';
  return os.str();
}

std::string aggregateCsv(PriorKind prior, const std::vector<AggregateRow>& rows) {
  std::ostringstream os;
  os << "prior,method,n_train,alpha,alpha2,mean,stddev,min,max,count,failed\n";
  for (const auto& r : rows)
    os << toString(prior) << ',' << toString(r.method) << ',' << r.trainingSize << ','
       << formatDouble(r.alpha) << ',' << formatDouble(r.alpha2) << ',' << formatDouble(r.mean) << ','
       << formatDouble(r.stddev) << ',' << formatDouble(r.min) << ',' << formatDouble(r.max) << ','
       << r.count << ',' << r.failed << '\n';
  return os.str();
}

std::string surfaceCsv(PriorKind prior, const std::vector<SurfacePoint>& pts) {
  std::ostringstream os;
  os << "prior,method,n_train,alpha,mean_error\n";
  for (const auto& p : pts)
    os << toString(prior) << ',' << toString(p.method) << ',' << p.trainingSize << ','
       << formatDouble(p.alpha) << ',' << formatDouble(p.meanError) << '\n';
  return os.str();
}

std::string convergenceCsv(const std::vector<ConvergenceRow>& rows) {
  std::ostringstream os;
  os << "method,n_train,best_error,tikhonov_error,gap\n";
  for (const auto& r : rows)
    os << toString(r.method) << ',' << r.trainingSize << ',' << formatDouble(r.bestError) << ','
       << formatDouble(r.tikhonovError) << ',' << formatDouble(r.gap) << '\n';
  return os.str();
}

// Best mean error against training size, one polyline per method, log y axis.
std::string chartSvg(PriorKind prior, const std::vector<AggregateRow>& best) {
  constexpr double W = 640, H = 420, L = 70, R = 150, T = 40, B = 50;
  std::vector<Eigen::Index> sizes;
  double lo = HUGE_VAL, hi = -HUGE_VAL;
  for (const auto& r : best) {
    if (std::find(sizes.begin(), sizes.end(), r.trainingSize) == sizes.end())
      sizes.push_back(r.trainingSize);
    if (r.count > 0 && r.mean > 0 && std::isfinite(r.mean)) {
      lo = std::min(lo, std::log10(r.mean));
      hi = std::max(hi, std::log10(r.mean));
    }
  }
  std::sort(sizes.begin(), sizes.end());
  if (!(lo <= hi)) lo = -1, hi = 0;
  lo = std::floor(lo);
  hi = std::max(std::ceil(hi), lo + 1);
  const double xmin = sizes.empty() ? 0.0 : static_cast<double>(sizes.front());
  const double xmax = sizes.size() < 2 ? xmin + 1.0 : static_cast<double>(sizes.back());
  auto px = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto py = [&](double y) { return T + (hi - std::log10(y)) / (hi - lo) * (H - T - B); };
  auto fmt = [](double v) { return formatDouble(std::round(v * 100.0) / 100.0); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << L << "\" y=\"22\">best mean relative error (" << toString(prior)
     << " prior)</text>\n"
     << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n"
     << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
     << "\" stroke=\"black\"/>\n";
  for (int e = static_cast<int>(lo); e <= static_cast<int>(hi); ++e) {
    const double y = py(std::pow(10.0, e));
    os << "<text x=\"" << L - 8 << "\" y=\"" << fmt(y + 4) << "\" text-anchor=\"end\">1e" << e
       << "</text>\n";
  }
  for (auto s : sizes)
    os << "<text x=\"" << fmt(px(static_cast<double>(s))) << "\" y=\"" << H - B + 18
       << "\" text-anchor=\"middle\">" << s << "</text>\n";
  os << "<text x=\"" << fmt((L + W - R) / 2) << "\" y=\"" << H - 10
     << "\" text-anchor=\"middle\">training size</text>\n";

  const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728"};
  int k = 0;
  for (Method m : kAllMethods) {
    std::ostringstream pts;
    for (auto s : sizes)
      for (const auto& r : best)
        if (r.method == m && r.trainingSize == s && r.count > 0 && r.mean > 0 && std::isfinite(r.mean))
          pts << fmt(px(static_cast<double>(s))) << ',' << fmt(py(r.mean)) << ' ';
    const char* c = colors[k];
    os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"" << pts.str()
       << "\"/>\n"
       << "<text x=\"" << W - R + 10 << "\" y=\"" << T + 16 * k + 4 << "\" fill=\"" << c << "\">"
       << toString(m) << "</text>\n";
    ++k;
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace

std::vector<fs::path> emitReport(const ErrorReport& report, const fs::path& dir,
                                 const std::vector<ConvergenceRow>& convergence) {
  if (report.records.empty()) throw InvalidArgument("emitReport: report has no records");
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());

  const auto best = bestRows(report);
  std::vector<fs::path> out;
  auto emit = [&](const char* name, const std::string& text) {
    writeTextFile(dir / name, text);
    out.push_back(dir / name);
  };
  emit("results.csv", resultsCsv(report));
  emit("aggregate.csv", aggregateCsv(report.priorKind, aggregate(report)));
  emit("best.csv", aggregateCsv(report.priorKind, best));
  emit("surface.csv", surfaceCsv(report.priorKind, surfaceFrom(report)));
  if (!convergence.empty()) emit("convergence.csv", convergenceCsv(convergence));
  emit("report.svg", chartSvg(report.priorKind, best));
  return out;
}

}  // namespace mcinv
