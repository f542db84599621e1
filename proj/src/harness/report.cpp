// SPDX-License-Identifier: Apache-2.0
#include "textsense/harness/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace textsense::harness {
namespace {

constexpr std::int64_t kUnitsPerPercent = 10000;

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

void check_field(const std::string& s) {
  if (s.find_first_of(",\n\r") != std::string::npos)
    throw std::invalid_argument("report field contains a separator: " + s);
}

// Display width in code points, so "Δ" counts as one column.
std::size_t display_width(const std::string& s) {
  return static_cast<std::size_t>(
      std::count_if(s.begin(), s.end(), [](char c) { return (static_cast<unsigned char>(c) & 0xC0) != 0x80; }));
}

std::string pad(const std::string& s, std::size_t width, bool left) {
  const std::string fill(width - std::min(width, display_width(s)), ' ');
  return left ? s + fill : fill + s;
}

}  // namespace

const ReportRow* ReportTable::find(const std::string& method, const std::string& seed) const {
  for (const auto& row : rows)
    if (row.method == method && row.seed == seed) return &row;
  return nullptr;
}

std::int64_t to_units(double fraction) {
  if (!std::isfinite(fraction)) throw std::invalid_argument("to_units: non-finite value");
  return std::llround(fraction * 100.0 * kUnitsPerPercent);
}

std::string format_units(std::int64_t units, int decimals) {
  if (decimals < 0 || decimals > 4) throw std::invalid_argument("format_units: decimals must be 0..4");
  std::int64_t divisor = 1;
  for (int i = decimals; i < 4; ++i) divisor *= 10;
  // Round half away from zero in integer arithmetic.
  const bool negative = units < 0;
  std::int64_t mag = negative ? -units : units;
  mag = (mag + divisor / 2) / divisor;
  std::int64_t scale = 1;
  for (int i = 0; i < decimals; ++i) scale *= 10;
  std::string out = (negative && mag != 0 ? "-" : "") + std::to_string(mag / scale);
  if (decimals > 0) {
    std::string frac = std::to_string(mag % scale);
    out += "." + std::string(static_cast<std::size_t>(decimals) - frac.size(), '0') + frac;
  }
  return out;
}

std::int64_t parse_units(const std::string& text) {
  std::size_t pos = 0;
  bool negative = false;
  if (pos < text.size() && (text[pos] == '-' || text[pos] == '+')) negative = text[pos++] == '-';
  std::int64_t whole = 0;
  std::size_t digits = 0;
  for (; pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])); ++pos, ++digits)
    whole = whole * 10 + (text[pos] - '0');
  std::int64_t frac = 0;
  int frac_digits = 0;
  if (pos < text.size() && text[pos] == '.') {
    for (++pos; pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos])); ++pos) {
      if (++frac_digits > 4) throw std::invalid_argument("more than 4 decimals: " + text);
      frac = frac * 10 + (text[pos] - '0');
      ++digits;
    }
  }
  if (pos != text.size() || digits == 0) throw std::invalid_argument("not a number: '" + text + "'");
  for (int i = frac_digits; i < 4; ++i) frac *= 10;
  const std::int64_t units = whole * kUnitsPerPercent + frac;
  return negative ? -units : units;
}

std::int64_t mean_units(const std::vector<std::int64_t>& values) {
  if (values.empty()) throw std::invalid_argument("mean_units: no values");
  long double sum = 0;
  for (auto v : values) sum += static_cast<long double>(v);
  return std::llround(sum / static_cast<long double>(values.size()));
}

std::int64_t std_units(const std::vector<std::int64_t>& values) {
  if (values.size() < 2) return 0;
  long double mean = 0;
  for (auto v : values) mean += static_cast<long double>(v);
  mean /= static_cast<long double>(values.size());
  long double ss = 0;
  for (auto v : values) ss += (static_cast<long double>(v) - mean) * (static_cast<long double>(v) - mean);
  return std::llround(std::sqrt(ss / static_cast<long double>(values.size() - 1)));
}

std::string to_csv(const ReportTable& table) {
  std::ostringstream out;
  out << "method,seed";
  for (const auto& c : table.columns) {
    check_field(c);
    out << ',' << c;
  }
  out << '\n';
  for (const auto& row : table.rows) {
    check_field(row.method);
    check_field(row.seed);
    if (row.values.size() != table.columns.size())
      throw std::invalid_argument("report row '" + row.method + "' has the wrong number of cells");
    out << row.method << ',' << row.seed;
    for (const auto& v : row.values) out << ',' << (v ? format_units(*v) : "");
    out << '\n';
  }
  return out.str();
}

ReportTable parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty report");
  const auto header = split_line(line);
  if (header.size() < 2 || header[0] != "method" || header[1] != "seed")
    throw std::invalid_argument("report header must start with method,seed");
  ReportTable table;
  table.columns.assign(header.begin() + 2, header.end());
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_line(line);
    if (fields.size() != header.size())
      throw std::invalid_argument("report line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(header.size()) + " fields");
    ReportRow row{fields[0], fields[1], {}};
    for (std::size_t i = 2; i < fields.size(); ++i)
      row.values.push_back(fields[i].empty() ? Cell{} : Cell{parse_units(fields[i])});
    table.rows.push_back(std::move(row));
  }
  return table;
}

ReportTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_csv(buf.str());
}

void write_csv(const std::filesystem::path& path, const ReportTable& table) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << to_csv(table);
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

std::string render_text(const ReportTable& table) {
  std::vector<std::vector<std::string>> cells;
  cells.push_back({"method", "seed"});
  cells[0].insert(cells[0].end(), table.columns.begin(), table.columns.end());
  for (const auto& row : table.rows) {
    std::vector<std::string> line{row.method, row.seed};
    for (const auto& v : row.values) line.push_back(v ? format_units(*v, 2) : "n/a");
    cells.push_back(std::move(line));
  }
  std::vector<std::size_t> width(cells[0].size(), 0);
  for (const auto& line : cells)
    for (std::size_t i = 0; i < line.size(); ++i) width[i] = std::max(width[i], display_width(line[i]));
  std::ostringstream out;
  if (!table.title.empty()) out << table.title << '\n';
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t i = 0; i < cells[r].size(); ++i) {
      if (i) out << "  ";
      out << pad(cells[r][i], width[i], i < 2);
    }
    out << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : width) total += w;
      out << std::string(total + 2 * (width.size() - 1), '-') << '\n';
    }
  }
  return out.str();
}

}  // namespace textsense::harness
