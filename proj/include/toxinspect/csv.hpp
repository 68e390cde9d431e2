#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace toxinspect::csv {

struct Row {
  std::vector<std::string> fields;
  std::size_t line = 0;  // 1-based physical line where the record starts
};

// RFC-4180: comma separated, CRLF or LF record ends, double quotes escape
// themselves inside quoted fields, quoted fields may span lines. Throws
// Error(kBadRequest) on an unterminated quote or stray quote in an unquoted
// field.
std::vector<Row> parse(std::string_view content);

std::string quote(std::string_view field);

}  // namespace toxinspect::csv
