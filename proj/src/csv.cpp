#include "lite/csv.hpp"

#include "lite/diagnostic.hpp"

namespace lite::csv {

std::vector<Record> parse(std::string_view text) {
  std::vector<Record> out;
  Record rec;
  std::string cell;
  bool in_quotes = false;
  bool row_has_content = false;
  std::size_t line = 1;
  rec.line = 1;

  auto end_row = [&] {
    rec.cells.push_back(std::move(cell));
    cell.clear();
    if (row_has_content) out.push_back(std::move(rec));
    rec = Record{};
    row_has_content = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        cell += c;
      }
      continue;
    }
    switch (c) {
      case '"':
        in_quotes = true;
        row_has_content = true;
        break;
      case ',':
        rec.cells.push_back(std::move(cell));
        cell.clear();
        row_has_content = true;
        break;
      case '\r':
        break;
      case '\n':
        end_row();
        rec.line = ++line;
        break;
      default:
        cell += c;
        row_has_content = true;
    }
  }
  if (in_quotes) throw Error("BadCsv", "unterminated quoted field");
  if (row_has_content) end_row();
  return out;
}

std::string format_row(const Row& row) {
  std::string out;
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out += ',';
    const auto& c = row[i];
    if (c.find_first_of(",\"\n\r") == std::string::npos) {
      out += c;
      continue;
    }
    out += '"';
    for (char ch : c) {
      if (ch == '"') out += '"';
      out += ch;
    }
    out += '"';
  }
  return out;
}

}  // namespace lite::csv
