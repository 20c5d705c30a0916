// Copyright (c) 2026 the eqgrad authors
// SPDX-License-Identifier: Apache-2.0
#include "eqgrad/csv.hpp"

#include <charconv>
#include <cmath>
#include <fstream>

#include "eqgrad/errors.hpp"

namespace eqgrad {

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

CsvTable::CsvTable(std::vector<std::string> columns)
    : columns_(std::move(columns)) {}

void CsvTable::add_row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_.size()) {
    throw UsageError("CsvTable: row has " + std::to_string(cells.size()) +
                     " cells, table has " + std::to_string(columns_.size()) +
                     " columns");
  }
  std::string row;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) row += ',';
    row += cells[i];
  }
  rows_.push_back(std::move(row));
}

std::string CsvTable::to_string() const {
  std::string out;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i) out += ',';
    out += columns_[i];
  }
  out += '\n';
  for (const std::string& r : rows_) {
    out += r;
    out += '\n';
  }
  return out;
}

void CsvTable::write_file(const std::string& path) const {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open '" + path + "' for writing");
  os << to_string();
}

std::string cell(double v) { return format_double(v); }
std::string cell(int v) { return std::to_string(v); }
std::string cell(std::uint64_t v) { return std::to_string(v); }
std::string cell(bool v) { return v ? "1" : "0"; }
std::string cell(const char* v) { return std::string(v); }
std::string cell(const std::string& v) { return v; }

}  // namespace eqgrad
