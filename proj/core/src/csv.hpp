#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "bitbit/dataset.hpp"
#include "bitbit/error.hpp"

namespace bitbit::detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

// Splits one CSV line on commas. Double-quoted fields may contain commas and
// "" escapes; surrounding whitespace is dropped.
inline std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> fields;
  std::string current;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        current.push_back('"');
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        current.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back(trim(current));
      current.clear();
    } else {
      current.push_back(ch);
    }
  }
  fields.emplace_back(trim(current));
  return fields;
}

// Full-field parse of a real; false for empty cells and trailing garbage.
inline bool parse_real(std::string_view text, double& out) {
  text = trim(text);
  if (text.empty()) return false;
  if (text.front() == '+') text.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

// Resolves a label column against a header row.
inline std::size_t resolve_column(const std::vector<std::string>& header, const ColumnRef& ref) {
  if (const auto* index = std::get_if<std::size_t>(&ref)) {
    if (*index >= header.size()) {
      throw DataError("label column index " + std::to_string(*index) + " out of range (" +
                      std::to_string(header.size()) + " columns)");
    }
    return *index;
  }
  const auto& name = std::get<std::string>(ref);
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw DataError("label column '" + name + "' not found in header");
}

// Describes a bad feature cell; row is 1-based over data rows.
inline std::string cell_error(std::size_t row, std::size_t column, const std::string& column_name,
                              std::string_view cell) {
  std::string what = "row " + std::to_string(row) + ", column " + std::to_string(column + 1) +
                     " ('" + column_name + "'): ";
  if (trim(cell).empty()) return what + "missing value";
  return what + "value '" + std::string(cell) + "' is not a finite real";
}

}  // namespace bitbit::detail
