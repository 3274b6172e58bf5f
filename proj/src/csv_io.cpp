#include "mcinv/csv_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <vector>

#include "mcinv/error.hpp"

namespace mcinv {

std::string formatDouble(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

double parseDouble(std::string_view text, const std::string& what) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size())
    throw ParseError(what + ": '" + std::string(text) + "' is not a number");
  return v;
}

void writeTextFile(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void writeMatrixCsv(const std::filesystem::path& path, const Matrix& m) {
  std::string text = std::to_string(m.rows()) + "," + std::to_string(m.cols()) + "\n";
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) text += ',';
      text += formatDouble(m(i, j));
    }
    text += '\n';
  }
  writeTextFile(path, text);
}

namespace {

std::vector<std::string_view> splitCommas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

Matrix readMatrixCsv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open matrix file '" + path.string() + "'");
  const std::string where = path.string();
  std::string line;
  if (!std::getline(in, line)) throw ParseError(where + ": missing 'rows,cols' header");
  const auto header = splitCommas(line);
  if (header.size() != 2) throw ParseError(where + ":1: header must be 'rows,cols'");
  const double rowsD = parseDouble(header[0], where + ":1 rows");
  const double colsD = parseDouble(header[1], where + ":1 cols");
  if (rowsD < 0 || colsD < 0 || rowsD != static_cast<double>(static_cast<long>(rowsD)) ||
      colsD != static_cast<double>(static_cast<long>(colsD)))
    throw ParseError(where + ":1: rows and cols must be nonnegative integers");
  const auto rows = static_cast<Eigen::Index>(rowsD);
  const auto cols = static_cast<Eigen::Index>(colsD);

  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const std::string lineNo = where + ":" + std::to_string(i + 2);
    if (!std::getline(in, line)) throw ParseError(lineNo + ": expected " + std::to_string(rows) + " data rows");
    const auto fields = splitCommas(line);
    if (static_cast<Eigen::Index>(fields.size()) != cols)
      throw ParseError(lineNo + ": expected " + std::to_string(cols) + " values, got " +
                       std::to_string(fields.size()));
    for (Eigen::Index j = 0; j < cols; ++j)
      m(i, j) = parseDouble(fields[static_cast<std::size_t>(j)], lineNo);
  }
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") != std::string::npos)
      throw ParseError(where + ": trailing data after " + std::to_string(rows) + " rows");
  }
  return m;
}

}  // namespace mcinv
