#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace solistab {

/// Shortest decimal form that round-trips to the same double.
std::string format_double(double x);

/// Comma-separated writer with a header row and LF line endings.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& header);
  void row(const std::vector<double>& values);
  void row(const std::vector<std::string>& cells);

 private:
  std::string path_;
  std::size_t columns_;
};

void write_json(const std::string& path, const nlohmann::json& j);
nlohmann::json read_json(const std::string& path);

}  // namespace solistab
