#pragma once

#include <string>
#include <vector>

namespace ppgbench {

// Minimal CSV support for the toolkit's file contracts: comma separated,
// no quoting or embedded commas, '#' lines are comments.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;  // 1-based source line per row

  std::size_t column(const std::string& name) const;  // throws SchemaError
};

std::vector<std::string> split_csv_line(const std::string& line);
CsvTable read_csv(const std::string& path);

double parse_double(const std::string& text, const std::string& context,
                    std::size_t line_number);

}  // namespace ppgbench
