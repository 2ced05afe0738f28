#pragma once

#include <gelkit/types.hpp>

#include <istream>
#include <string>
#include <vector>

namespace gelkit::cli {

/// Comma-separated numerics. Blank lines are skipped; `columns` (0-based)
/// selects and orders the kept columns, empty keeps all. Errors carry 1-based
/// file line and column numbers: ParseError for malformed fields or ragged
/// rows, NonFiniteError for nan/inf.
DataMatrix read_csv(std::istream& in, bool has_header, const std::vector<Index>& columns = {});

/// As above; IoError if the file cannot be opened.
DataMatrix read_csv(const std::string& path, bool has_header, const std::vector<Index>& columns = {});

struct Mspe {
  double mspe = 0;
  double sd = 0;  // population SD of the squared errors
};

/// Prediction error of y = theta_0 + x'theta_rest on rows (y, x...).
Mspe mspe_eval(const Vector& theta, const DataMatrix& test);

}  // namespace gelkit::cli
