#include "ppgbench/csv.hpp"

#include <cstdlib>
#include <fstream>

#include "ppgbench/errors.hpp"

namespace ppgbench {

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  raise(ErrorCode::SchemaError, "missing column '" + name + "'");
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::IoError, "cannot open " + path);
  CsvTable table;
  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty() || line[0] == '#') continue;
    auto fields = split_csv_line(line);
    if (table.header.empty()) {
      table.header = std::move(fields);
      continue;
    }
    if (fields.size() != table.header.size())
      raise(ErrorCode::ParseError, path + " line " + std::to_string(line_number) +
                                       ": expected " + std::to_string(table.header.size()) +
                                       " fields, got " + std::to_string(fields.size()));
    table.rows.push_back(std::move(fields));
    table.line_numbers.push_back(line_number);
  }
  if (table.header.empty())
    raise(ErrorCode::ParseError, path + ": missing header row");
  return table;
}

double parse_double(const std::string& text, const std::string& context,
                    std::size_t line_number) {
  if (text.empty())
    raise(ErrorCode::ParseError,
          context + " line " + std::to_string(line_number) + ": empty numeric field");
  char* end = nullptr;
  const double value = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0')
    raise(ErrorCode::ParseError, context + " line " + std::to_string(line_number) +
                                     ": bad number '" + text + "'");
  return value;
}

}  // namespace ppgbench
