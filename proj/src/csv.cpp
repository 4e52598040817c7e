#include "kapc/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace kapc {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

double parse_double(const std::string& raw, const std::string& path,
                    size_t lineno) {
  // trim whitespace; anything else must parse as a full decimal float
  size_t a = raw.find_first_not_of(" \t\r");
  size_t b = raw.find_last_not_of(" \t\r");
  if (a == std::string::npos)
    throw DataError(path + ": line " + std::to_string(lineno) +
                    ": missing value");
  const std::string s = raw.substr(a, b - a + 1);
  double value = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw DataError(path + ": line " + std::to_string(lineno) +
                    ": cannot parse '" + s + "' as a number");
  return value;
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace

CsvTable read_csv(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.size() < 2)
    throw DataError(path + ": need a header row and at least one data row");
  CsvTable table;
  table.header = split_line(lines[0]);
  const size_t p = table.header.size();
  if (p == 0) throw DataError(path + ": empty header");
  table.values.resize(static_cast<Index>(lines.size() - 1),
                      static_cast<Index>(p));
  for (size_t r = 1; r < lines.size(); ++r) {
    const auto fields = split_line(lines[r]);
    if (fields.size() != p)
      throw DataError(path + ": line " + std::to_string(r + 1) + ": expected " +
                      std::to_string(p) + " fields, got " +
                      std::to_string(fields.size()));
    for (size_t c = 0; c < p; ++c)
      table.values(static_cast<Index>(r - 1), static_cast<Index>(c)) =
          parse_double(fields[c], path, r + 1);
  }
  return table;
}

MatrixXd read_matrix_csv(const std::string& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw DataError(path + ": empty file");
  const size_t cols = split_line(lines[0]).size();
  MatrixXd out(static_cast<Index>(lines.size()), static_cast<Index>(cols));
  for (size_t r = 0; r < lines.size(); ++r) {
    const auto fields = split_line(lines[r]);
    if (fields.size() != cols)
      throw DataError(path + ": line " + std::to_string(r + 1) +
                      ": ragged row");
    for (size_t c = 0; c < cols; ++c)
      out(static_cast<Index>(r), static_cast<Index>(c)) =
          parse_double(fields[c], path, r + 1);
  }
  return out;
}

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const MatrixXd& values) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path);
  out.precision(17);
  if (!header.empty()) {
    if (static_cast<Index>(header.size()) != values.cols())
      throw DataError("write_csv: header does not match column count");
    for (size_t j = 0; j < header.size(); ++j)
      out << header[j] << (j + 1 < header.size() ? "," : "\n");
  }
  for (Index i = 0; i < values.rows(); ++i)
    for (Index j = 0; j < values.cols(); ++j)
      out << values(i, j) << (j + 1 < values.cols() ? "," : "\n");
  if (!out) throw DataError("failed writing " + path);
}

}  // namespace kapc
