#pragma once

#include <filesystem>
#include <istream>
#include <map>
#include <string>

#include "mcinv/experiment.hpp"

namespace mcinv {

/// Flat "key = value" text with '#' comments. Keys must be unique.
class FlatConfig {
 public:
  struct Entry {
    std::string value;
    int line = 0;
  };

  static FlatConfig parse(std::istream& in, const std::string& source);
  static FlatConfig load(const std::filesystem::path& path);

  const std::map<std::string, Entry>& entries() const { return entries_; }
  const std::string& source() const { return source_; }

 private:
  std::string source_;
  std::map<std::string, Entry> entries_;
};

/// Builds a validated ExperimentConfig; keys absent from the file keep their
/// defaults. Unknown keys and malformed values throw ParseError naming the
/// source line and key.
ExperimentConfig experimentConfigFrom(const FlatConfig& flat);
ExperimentConfig loadExperimentConfig(const std::filesystem::path& path);

/// Every field materialized, in a form experimentConfigFrom reads back exactly.
std::string toFlatText(const ExperimentConfig& cfg);

}  // namespace mcinv
