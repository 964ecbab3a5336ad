#pragma once

#include <istream>
#include <string>
#include <string_view>
#include <vector>

namespace geodesign {

// Minimal CSV support for the flat, comma-only files this project reads and
// writes. No quoting or escaping: geo ids and numbers never contain commas.

struct CsvRow {
  long line;  // 1-based physical line number, header included
  std::vector<std::string> fields;
};

// Reads all rows; skips blank lines; trims a trailing '\r' so files written
// on Windows load cleanly.
std::vector<CsvRow> read_csv(std::istream& in);

// Numeric cell parser. Rejects empty cells, surrounding junk, NaN and inf.
bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, long& out);

// Shortest decimal form that round-trips exactly through parse_double.
std::string format_double(double v);

}  // namespace geodesign
