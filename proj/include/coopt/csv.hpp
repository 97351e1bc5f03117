#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace coopt {

/// Formats with 17 significant digits so values round-trip exactly.
std::string format_double(double value);

/// Minimal comma-separated writer; throws Error if the file cannot be opened.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);

  void row(const std::vector<double>& values);

 private:
  std::ofstream out_;
  std::size_t width_;
};

}  // namespace coopt
