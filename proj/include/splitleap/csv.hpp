#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace splitleap {

/// Shortest decimal that round-trips to the same double.
std::string format_number(double v);

/// In-memory CSV: one comment line, one header row, data rows.
class CsvTable {
 public:
  CsvTable(std::string comment, std::vector<std::string> header);

  void add_row(std::vector<std::string> cells);
  void add_row(const std::vector<double>& values);
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;

 private:
  std::string comment_;
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

/// "key=value" pairs joined into a single comment body, in the given order.
std::string config_comment(const std::string& command, const std::vector<std::pair<std::string, std::string>>& fields);

/// File name -> contents. Writing creates the directory.
using CsvBundle = std::map<std::string, std::string>;

void write_bundle(const CsvBundle& bundle, const std::filesystem::path& dir);

}  // namespace splitleap
