#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace paramforge::csv {

using Row = std::vector<std::string>;

// Strict RFC-4180 parse of a whole buffer. Accepts LF or CRLF record
// terminators and an optional trailing terminator. Throws MalformedCsv
// (naming the 1-based record number, header = 1) on unterminated quotes,
// stray quotes inside unquoted fields, or text after a closing quote.
// A leading UTF-8 byte-order mark is skipped.
std::vector<Row> parse(std::string_view text);

// Quotes a field when it contains a comma, quote, CR or LF.
std::string escape(std::string_view field);

}  // namespace paramforge::csv
