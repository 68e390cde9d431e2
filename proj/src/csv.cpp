#include "toxinspect/csv.hpp"

#include "toxinspect/error.hpp"

namespace toxinspect::csv {

std::vector<Row> parse(std::string_view content) {
  std::vector<Row> rows;
  Row row;
  std::string field;
  std::size_t line = 1;
  row.line = line;
  bool in_quotes = false;
  bool field_was_quoted = false;
  bool row_has_content = false;

  auto end_field = [&] {
    row.fields.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_row = [&] {
    end_field();
    // A bare empty line is not a record.
    if (row_has_content || row.fields.size() > 1 || !row.fields.front().empty()) {
      rows.push_back(std::move(row));
    }
    row = Row{};
    row.line = line;
    row_has_content = false;
  };

  for (std::size_t i = 0; i < content.size(); ++i) {
    const char c = content[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < content.size() && content[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted) {
          fail(ErrorCode::kBadRequest,
               "row " + std::to_string(row.line) + ": stray quote in unquoted field",
               {{"row", row.line}});
        }
        in_quotes = true;
        field_was_quoted = true;
        row_has_content = true;
        break;
      case ',':
        end_field();
        row_has_content = true;
        break;
      case '\r':
        if (i + 1 < content.size() && content[i + 1] == '\n') ++i;
        ++line;
        end_row();
        break;
      case '\n':
        ++line;
        end_row();
        break;
      default:
        if (field_was_quoted) {
          fail(ErrorCode::kBadRequest,
               "row " + std::to_string(row.line) + ": text after closing quote",
               {{"row", row.line}});
        }
        field.push_back(c);
        row_has_content = true;
    }
  }
  if (in_quotes) {
    fail(ErrorCode::kBadRequest, "row " + std::to_string(row.line) + ": unterminated quote",
         {{"row", row.line}});
  }
  if (row_has_content || !field.empty()) end_row();
  return rows;
}

std::string quote(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

}  // namespace toxinspect::csv
