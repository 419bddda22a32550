#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace malscope::csv {

/// Splits one CSV record. Double-quoted fields may contain commas and
/// doubled quotes; records never span lines. Throws std::invalid_argument on
/// an unterminated quote.
std::vector<std::string> split_line(std::string_view line);

/// Quotes a field when it contains a comma, quote or whitespace at the edges.
std::string escape(std::string_view field);

std::string join(const std::vector<std::string>& fields);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

/// Strict double parse (whole field must be consumed).
double parse_double(std::string_view field);

}  // namespace malscope::csv
