#include "gelkit_cli/csv.hpp"

#include <gelkit/errors.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <string_view>

namespace gelkit::cli {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (;;) {
    const std::size_t comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

double parse_field(std::string_view field, long row, long col) {
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
  if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size()) {
    if (res.ec == std::errc::result_out_of_range) {
      throw NonFiniteError("value out of range at row " + std::to_string(row) + ", column " + std::to_string(col),
                           row, col);
    }
    throw ParseError("cannot parse '" + std::string(field) + "' as a number at row " + std::to_string(row) +
                         ", column " + std::to_string(col),
                     row, col);
  }
  if (!std::isfinite(v)) {
    throw NonFiniteError("non-finite value at row " + std::to_string(row) + ", column " + std::to_string(col), row,
                         col);
  }
  return v;
}

}  // namespace

DataMatrix read_csv(std::istream& in, bool has_header, const std::vector<Index>& columns) {
  std::vector<double> values;
  Index width = -1;
  Index rows = 0;
  long line_no = 0;
  std::string line;
  bool header_pending = has_header;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (line_no == 1 && view.substr(0, 3) == "\xEF\xBB\xBF") view.remove_prefix(3);
    if (trim(view).empty()) continue;
    if (header_pending) {
      header_pending = false;
      continue;
    }
    const auto fields = split(view);
    const auto count = static_cast<Index>(fields.size());
    if (width < 0) {
      width = count;
      for (Index c : columns) {
        if (c < 0 || c >= width) {
          throw ParseError("selected column " + std::to_string(c + 1) + " does not exist (file has " +
                               std::to_string(width) + " columns)",
                           line_no, static_cast<long>(c + 1));
        }
      }
    } else if (count != width) {
      throw ParseError("row " + std::to_string(line_no) + " has " + std::to_string(count) + " fields, expected " +
                           std::to_string(width),
                       line_no, static_cast<long>(std::min(count, width) + 1));
    }
    if (columns.empty()) {
      for (Index c = 0; c < count; ++c) {
        values.push_back(parse_field(fields[static_cast<std::size_t>(c)], line_no, static_cast<long>(c + 1)));
      }
    } else {
      for (Index c : columns) {
        values.push_back(parse_field(fields[static_cast<std::size_t>(c)], line_no, static_cast<long>(c + 1)));
      }
    }
    ++rows;
  }
  if (rows == 0) throw ParseError("no data rows", line_no, 0);
  const Index cols = columns.empty() ? width : static_cast<Index>(columns.size());
  DataMatrix out(rows, cols);
  std::copy(values.begin(), values.end(), out.data());
  return out;
}

DataMatrix read_csv(const std::string& path, bool has_header, const std::vector<Index>& columns) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_csv(in, has_header, columns);
}

Mspe mspe_eval(const Vector& theta, const DataMatrix& test) {
  if (test.rows() < 1) throw ArgumentError("mspe_eval: empty test set");
  if (test.cols() != theta.size()) throw ArgumentError("mspe_eval: theta does not match the test columns");
  const Index p = test.cols() - 1;
  const Vector pred = (test.rightCols(p) * theta.tail(p)).array() + theta[0];
  const Vector sq = (pred - test.col(0)).array().square();
  Mspe out;
  out.mspe = sq.mean();
  out.sd = std::sqrt((sq.array() - out.mspe).square().mean());
  return out;
}

}  // namespace gelkit::cli
