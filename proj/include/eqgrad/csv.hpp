// Copyright (c) 2026 the eqgrad authors
// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace eqgrad {

/// Shortest decimal string that round-trips to the same double
/// (std::to_chars). NaN -> "nan", infinities -> "inf"/"-inf".
std::string format_double(double v);

// Row-oriented CSV accumulator. Columns are fixed at construction; rows are
// rendered immediately so a finished table is just bytes. No quoting is
// needed: every cell this project emits is numeric or a bare token.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);

  void add_row(const std::vector<std::string>& cells);
  std::size_t row_count() const { return rows_.size(); }
  const std::vector<std::string>& columns() const { return columns_; }

  /// Header plus rows, '\n' line endings.
  std::string to_string() const;
  void write_file(const std::string& path) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::string> rows_;
};

std::string cell(double v);
std::string cell(int v);
std::string cell(std::uint64_t v);
std::string cell(bool v);
std::string cell(const char* v);
std::string cell(const std::string& v);

}  // namespace eqgrad
