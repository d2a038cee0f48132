#include "splitleap/csv.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <sstream>

#include "splitleap/errors.hpp"

namespace splitleap {

std::string format_number(double v) {
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  if (ec != std::errc()) throw InvalidArgument("format_number: conversion failed");
  return std::string(buf.data(), ptr);
}

CsvTable::CsvTable(std::string comment, std::vector<std::string> header)
    : comment_(std::move(comment)), header_(std::move(header)) {}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != header_.size()) throw InvalidArgument("csv: row width does not match the header");
  rows_.push_back(std::move(cells));
}

void CsvTable::add_row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_number(v));
  add_row(std::move(cells));
}

std::string CsvTable::str() const {
  std::ostringstream os;
  os << "# " << comment_ << '\n';
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '\n';
  };
  line(header_);
  for (const auto& r : rows_) line(r);
  return os.str();
}

std::string config_comment(const std::string& command, const std::vector<std::pair<std::string, std::string>>& fields) {
  std::string out = "splitleap " + command;
  for (const auto& [k, v] : fields) out += " " + k + "=" + v;
  return out;
}

void write_bundle(const CsvBundle& bundle, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create output directory " + dir.string() + ": " + ec.message());
  for (const auto& [name, content] : bundle) {
    const auto path = dir / name;
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path.string());
    out << content;
    if (!out) throw Error("write failed for " + path.string());
  }
}

}  // namespace splitleap
