#pragma once

#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace ctree::csv {

using Row = std::vector<std::string>;

// RFC-4180 reader: comma separated, double-quoted fields with "" escapes,
// LF or CRLF record terminators. A trailing newline does not produce an
// empty record. Throws DataError on an unterminated quote.
std::vector<Row> parse(std::string_view text);

// Quotes the field only when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);

void write_row(std::ostream& out, const Row& row);

// Shortest decimal representation that parses back to the same double.
std::string format_double(double value);

// Strict parse of a finite double (surrounding blanks allowed).
bool parse_double(std::string_view text, double& out);

std::string read_file(const std::string& path);

}  // namespace ctree::csv
