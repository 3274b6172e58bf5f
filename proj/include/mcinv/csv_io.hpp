#pragma once

#include <filesystem>
#include <string>

#include "mcinv/linalg.hpp"

namespace mcinv {

/// Shortest decimal text that parses back to exactly `v`.
std::string formatDouble(double v);

/// Parses a full string as a double; throws ParseError naming `what` otherwise.
double parseDouble(std::string_view text, const std::string& what);

/// Matrix CSV: a first line "rows,cols", then one comma-separated line per row.
void writeMatrixCsv(const std::filesystem::path& path, const Matrix& m);
Matrix readMatrixCsv(const std::filesystem::path& path);

/// Writes `text` to `path`, throwing IoError on failure.
void writeTextFile(const std::filesystem::path& path, const std::string& text);

}  // namespace mcinv
