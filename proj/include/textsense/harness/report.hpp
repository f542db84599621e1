// SPDX-License-Identifier: Apache-2.0
#pragma once

// Result tables. Every table has two key columns (method, seed) followed by
// metric columns. Cells hold percentages as integers in units of 1e-4 %, so
// the CSV text is exact and derived rows (deltas, means) are reproducible
// from the printed cells.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace textsense::harness {

using Cell = std::optional<std::int64_t>;  // nullopt = missing (failed cell)

struct ReportRow {
  std::string method;
  std::string seed;
  std::vector<Cell> values;
};

struct ReportTable {
  std::string title;
  std::vector<std::string> columns;  // metric columns only
  std::vector<ReportRow> rows;

  const ReportRow* find(const std::string& method, const std::string& seed) const;
};

/// Fraction in [0, 1] to 1e-4 % units.
std::int64_t to_units(double fraction);
/// "71.2900"-style text of a unit value.
std::string format_units(std::int64_t units, int decimals = 4);
std::int64_t parse_units(const std::string& text);

/// Rounded arithmetic mean and sample standard deviation of unit values.
std::int64_t mean_units(const std::vector<std::int64_t>& values);
std::int64_t std_units(const std::vector<std::int64_t>& values);

std::string to_csv(const ReportTable& table);
ReportTable parse_csv(const std::string& text);
ReportTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const ReportTable& table);

/// Aligned plain-text rendering with two decimals.
std::string render_text(const ReportTable& table);

}  // namespace textsense::harness
