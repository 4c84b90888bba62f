#pragma once

// CSV plumbing shared by the waveform, truth and estimate files.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <istream>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "qfe/errors.hpp"

namespace qfe::csv {

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(',', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <typename T>
T parse_field(std::string_view text, std::size_t line, std::string_view column) {
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty())
    throw ParseError("invalid value '" + std::string(text) + "' in column " + std::string(column),
                     line);
  if constexpr (std::is_floating_point_v<T>) {
    if (!std::isfinite(value))
      throw ParseError("non-finite value in column " + std::string(column), line);
  }
  return value;
}

/// Reads a numeric CSV with a fixed header; calls `row` for each data row.
template <typename Row>
void read_csv(std::istream& is, std::string_view header, Row&& row) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError("missing header", 1);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != header)
    throw ParseError("expected header '" + std::string(header) + "', got '" + line + "'", 1);
  const std::vector<std::string_view> names = split(header);
  std::size_t lineno = 1;
  std::int64_t prev_n = 0;
  bool first = true;
  while (std::getline(is, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string_view> fields = split(line);
    if (fields.size() != names.size())
      throw ParseError("expected " + std::to_string(names.size()) + " columns, got " +
                           std::to_string(fields.size()),
                       lineno);
    const auto n = parse_field<std::int64_t>(fields[0], lineno, names[0]);
    if (!first && n <= prev_n) throw SchemaError("sample index is not increasing", lineno);
    first = false;
    prev_n = n;
    std::vector<double> values;
    for (std::size_t c = 1; c < fields.size(); ++c)
      values.push_back(parse_field<double>(fields[c], lineno, names[c]));
    row(n, values, lineno);
  }
}

inline std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw std::runtime_error("cannot open " + path.string() + " for writing");
  return os;
}

inline std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error("cannot open " + path.string());
  return is;
}

}  // namespace qfe::csv
