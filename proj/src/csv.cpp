#include "coopt/csv.hpp"

#include <cstdio>

#include "coopt/errors.hpp"

namespace coopt {

std::string format_double(double value) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path,
                     const std::vector<std::string>& header)
    : out_(path), width_(header.size()) {
  if (!out_) throw Error("cannot open '" + path + "' for writing");
  for (std::size_t k = 0; k < header.size(); ++k) {
    out_ << (k ? "," : "") << header[k];
  }
  out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != width_) throw DimensionError("csv row width mismatch");
  for (std::size_t k = 0; k < values.size(); ++k) {
    out_ << (k ? "," : "") << format_double(values[k]);
  }
  out_ << '\n';
}

}  // namespace coopt
