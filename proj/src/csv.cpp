#include "crmac/csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <stdexcept>

namespace crmac {
namespace {

bool needs_quotes(const std::string& field) {
  return field.find_first_of(",\"\n\r") != std::string::npos;
}

void write_field(std::ostream& out, const std::string& field) {
  if (!needs_quotes(field)) {
    out << field;
    return;
  }
  out << '"';
  for (char ch : field) {
    if (ch == '"') out << '"';
    out << ch;
  }
  out << '"';
}

void write_line(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    write_field(out, fields[i]);
  }
  out << '\n';
}

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> fields(1);
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        fields.back() += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        fields.back() += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.emplace_back();
    } else {
      fields.back() += ch;
    }
  }
  return fields;
}

template <typename T>
std::string to_chars_string(T value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, res.ptr);
}

}  // namespace

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != header.size())
    throw std::logic_error("csv row has " + std::to_string(row.size()) + " fields, header has " +
                           std::to_string(header.size()));
  rows.push_back(std::move(row));
}

std::string format_number(double value) { return to_chars_string(value); }
std::string format_number(long long value) { return to_chars_string(value); }
std::string format_number(unsigned long long value) { return to_chars_string(value); }

void write_csv(std::ostream& out, const CsvTable& table) {
  for (const auto& c : table.comments) out << '#' << c << '\n';
  write_line(out, table.header);
  for (const auto& row : table.rows) write_line(out, row);
}

CsvTable parse_csv(std::istream& in) {
  CsvTable table;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!have_header && !line.empty() && line.front() == '#') {
      table.comments.push_back(line.substr(1));
      continue;
    }
    if (!have_header) {
      table.header = split_line(line);
      have_header = true;
      continue;
    }
    auto fields = split_line(line);
    if (fields.size() != table.header.size())
      throw std::runtime_error("csv: ragged row with " + std::to_string(fields.size()) + " fields");
    table.rows.push_back(std::move(fields));
  }
  return table;
}

}  // namespace crmac
