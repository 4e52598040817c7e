#pragma once

#include "kapc/types.hpp"

#include <string>
#include <vector>

namespace kapc {

/// Rectangular CSV with a mandatory header row, one column per variable,
/// strict decimal floats.  Malformed rows raise DataError with the 1-based
/// line number.
struct CsvTable {
  std::vector<std::string> header;
  MatrixXd values;
};

CsvTable read_csv(const std::string& path);

/// Headerless square numeric CSV (precomputed kernel matrices).
MatrixXd read_matrix_csv(const std::string& path);

void write_csv(const std::string& path, const std::vector<std::string>& header,
               const MatrixXd& values);

}  // namespace kapc
