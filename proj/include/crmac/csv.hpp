#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace crmac {

/// Comma-separated table with '#'-prefixed metadata lines before the header.
struct CsvTable {
  std::vector<std::string> comments;  ///< without the leading '#'
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
};

/// Shortest decimal that parses back to the same double.
std::string format_number(double value);
std::string format_number(long long value);
std::string format_number(unsigned long long value);

void write_csv(std::ostream& out, const CsvTable& table);
/// Inverse of write_csv. Throws std::runtime_error on ragged rows.
CsvTable parse_csv(std::istream& in);

}  // namespace crmac
