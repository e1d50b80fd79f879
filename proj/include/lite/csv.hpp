#pragma once

#include <string>
#include <string_view>
#include <vector>

// Minimal RFC 4180 reader/writer (comma separator, `"` quoting, LF or CRLF).
namespace lite::csv {

using Row = std::vector<std::string>;

struct Record {
  Row cells;
  std::size_t line = 0;  // 1-based line where the record starts
};

// Throws lite::Error("BadCsv") on an unterminated quoted field. Blank lines
// are skipped.
std::vector<Record> parse(std::string_view text);

std::string format_row(const Row& row);

}  // namespace lite::csv
