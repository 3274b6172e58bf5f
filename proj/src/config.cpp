#include "mcinv/config.hpp"

#include <cmath>
#include <fstream>
#include <functional>
#include <sstream>

#include "mcinv/csv_io.hpp"
#include "mcinv/error.hpp"

namespace mcinv {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> splitList(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = s.find(',', start);
    out.push_back(trim(s.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

FlatConfig FlatConfig::parse(std::istream& in, const std::string& source) {
  FlatConfig cfg;
  cfg.source_ = source;
  std::string raw;
  int lineNo = 0;
  while (std::getline(in, raw)) {
    ++lineNo;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw ParseError(source + ":" + std::to_string(lineNo) + ": expected 'key = value'");
    const std::string key(trim(line.substr(0, eq)));
    const std::string value(trim(line.substr(eq + 1)));
    if (key.empty()) throw ParseError(source + ":" + std::to_string(lineNo) + ": empty key");
    const auto [it, inserted] = cfg.entries_.emplace(key, Entry{value, lineNo});
    if (!inserted)
      throw ParseError(source + ":" + std::to_string(lineNo) + ": duplicate key '" + key +
                       "' (first set on line " + std::to_string(it->second.line) + ")");
  }
  return cfg;
}

FlatConfig FlatConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open config file '" + path.string() + "'");
  return parse(in, path.string());
}

namespace {

class Reader {
 public:
  explicit Reader(const FlatConfig& flat) : flat_(flat) {}

  std::string where(const std::string& key, int line) const {
    return flat_.source() + ":" + std::to_string(line) + ": key '" + key + "'";
  }

  double number(std::string_view text, const std::string& key, int line) const {
    return parseDouble(text, where(key, line));
  }

  long integer(std::string_view text, const std::string& key, int line) const {
    const double v = number(text, key, line);
    if (v != std::floor(v) || std::abs(v) > 9.0e15)
      throw ParseError(where(key, line) + ": '" + std::string(text) + "' is not an integer");
    return static_cast<long>(v);
  }

  // "a, b, c" or "logspace(lo, hi, count)".
  std::vector<double> grid(std::string_view text, const std::string& key, int line) const {
    text = trim(text);
    constexpr std::string_view prefix = "logspace(";
    if (text.substr(0, prefix.size()) == prefix) {
      if (text.back() != ')') throw ParseError(where(key, line) + ": unterminated logspace(");
      const auto args = splitList(text.substr(prefix.size(), text.size() - prefix.size() - 1));
      if (args.size() != 3) throw ParseError(where(key, line) + ": logspace takes (lo, hi, count)");
      const double lo = number(args[0], key, line);
      const double hi = number(args[1], key, line);
      const long count = integer(args[2], key, line);
      if (!(lo > 0.0) || !(hi >= lo) || count < 1)
        throw ParseError(where(key, line) + ": logspace needs 0 < lo <= hi and count >= 1");
      return logspace(lo, hi, static_cast<int>(count));
    }
    std::vector<double> out;
    for (auto item : splitList(text)) out.push_back(number(item, key, line));
    return out;
  }

 private:
  const FlatConfig& flat_;
};

bool parseBool(std::string_view s, const std::string& where) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw ParseError(where + ": '" + std::string(s) + "' is not a boolean");
}

}  // namespace

ExperimentConfig experimentConfigFrom(const FlatConfig& flat) {
  ExperimentConfig cfg;
  const Reader rd(flat);
  using Setter = std::function<void(const std::string&, const std::string&, int)>;
  const std::map<std::string, Setter> setters = {
      {"grid_size", [&](auto& k, auto& v, int l) { cfg.gridSize = rd.integer(v, k, l); }},
      {"kernel_width", [&](auto& k, auto& v, int l) { cfg.kernelWidth = rd.number(v, k, l); }},
      {"obs_count", [&](auto& k, auto& v, int l) { cfg.obsCount = rd.integer(v, k, l); }},
      {"noise_fraction", [&](auto& k, auto& v, int l) { cfg.noise.fraction = rd.number(v, k, l); }},
      {"noise_mode",
       [&](auto& k, auto& v, int l) {
         try {
           cfg.noise.mode = noiseModeFromString(v);
         } catch (const InvalidArgument& e) {
           throw ParseError(rd.where(k, l) + ": " + e.what());
         }
       }},
      {"noise_weight_floor",
       [&](auto& k, auto& v, int l) { cfg.noise.weightFloor = rd.number(v, k, l); }},
      {"prior_kind",
       [&](auto& k, auto& v, int l) {
         try {
           cfg.priorKind = priorKindFromString(v);
         } catch (const InvalidArgument& e) {
           throw ParseError(rd.where(k, l) + ": " + e.what());
         }
       }},
      {"prior_scale", [&](auto& k, auto& v, int l) { cfg.priorScale = rd.number(v, k, l); }},
      {"boundary_relaxation",
       [&](auto& k, auto& v, int l) { cfg.boundaryRelaxation = rd.number(v, k, l); }},
      {"training_sizes",
       [&](auto& k, auto& v, int l) {
         cfg.trainingSizes.clear();
         for (auto item : splitList(v)) cfg.trainingSizes.push_back(rd.integer(item, k, l));
       }},
      {"test_size", [&](auto& k, auto& v, int l) { cfg.testSize = rd.integer(v, k, l); }},
      {"repetitions",
       [&](auto& k, auto& v, int l) { cfg.repetitions = static_cast<int>(rd.integer(v, k, l)); }},
      {"alpha_grid", [&](auto& k, auto& v, int l) { cfg.alphaGrid = rd.grid(v, k, l); }},
      {"ndnn_grid", [&](auto& k, auto& v, int l) { cfg.ndnnGrid = rd.grid(v, k, l); }},
      {"master_seed",
       [&](auto& k, auto& v, int l) {
         const long s = rd.integer(v, k, l);
         if (s < 0) throw ParseError(rd.where(k, l) + ": seed must be nonnegative");
         cfg.masterSeed = static_cast<std::uint64_t>(s);
       }},
      {"fixed_indices",
       [&](auto& k, auto& v, int l) { cfg.fixedIndices = parseBool(v, rd.where(k, l)); }},
      {"pinv_tolerance", [&](auto& k, auto& v, int l) { cfg.pinvTolerance = rd.number(v, k, l); }},
      {"study",
       [&](auto& k, auto& v, int l) {
         try {
           cfg.study = studyKindFromString(v);
         } catch (const InvalidArgument& e) {
           throw ParseError(rd.where(k, l) + ": " + e.what());
         }
       }},
  };

  for (const auto& [key, entry] : flat.entries()) {
    const auto it = setters.find(key);
    if (it == setters.end())
      throw ParseError(flat.source() + ":" + std::to_string(entry.line) + ": unknown key '" + key +
                       "'");
    it->second(key, entry.value, entry.line);
  }
  try {
    cfg.validate();
  } catch (const InvalidArgument& e) {
    throw ParseError(flat.source() + ": " + e.what());
  }
  return cfg;
}

ExperimentConfig loadExperimentConfig(const std::filesystem::path& path) {
  return experimentConfigFrom(FlatConfig::load(path));
}

std::string toFlatText(const ExperimentConfig& cfg) {
  auto list = [](const auto& values) {
    std::string s;
    for (const auto& v : values) {
      if (!s.empty()) s += ", ";
      if constexpr (std::is_floating_point_v<std::decay_t<decltype(v)>>)
        s += formatDouble(v);
      else
        s += std::to_string(v);
    }
    return s;
  };
  std::ostringstream out;
  out << "# deconvolution study configuration (all defaults resolved)\n"
      << "grid_size = " << cfg.gridSize << "            # points on [0, 1]\n"
      << "kernel_width = " << formatDouble(cfg.kernelWidth) << "       # blur std-dev, unit-interval length\n"
      << "obs_count = " << cfg.obsCount << "\n"
      << "noise_fraction = " << formatDouble(cfg.noise.fraction) << "\n"
      << "noise_mode = " << toString(cfg.noise.mode) << "\n"
      << "noise_weight_floor = " << formatDouble(cfg.noise.weightFloor) << "\n"
      << "prior_kind = " << toString(cfg.priorKind) << "\n"
      << "prior_scale = " << formatDouble(cfg.priorScale) << "\n"
      << "boundary_relaxation = " << formatDouble(cfg.boundaryRelaxation) << "\n"
      << "training_sizes = " << list(cfg.trainingSizes) << "\n"
      << "test_size = " << cfg.testSize << "\n"
      << "repetitions = " << cfg.repetitions << "\n"
      << "alpha_grid = " << list(cfg.alphaGrid) << "\n"
      << "ndnn_grid = " << list(cfg.ndnnGrid) << "\n"
      << "master_seed = " << cfg.masterSeed << "\n"
      << "fixed_indices = " << (cfg.fixedIndices ? "true" : "false") << "\n"
      << "pinv_tolerance = " << formatDouble(cfg.pinvTolerance) << "\n"
      << "study = " << toString(cfg.study) << "\n";
  return out.str();
}

}  // namespace mcinv
