#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace summrec::csv {

using Row = std::vector<std::string>;

// RFC 4180 reader: quoted fields may contain commas, doubled quotes and line
// breaks. Accepts LF or CRLF record separators. Throws ParseError on an
// unterminated quote.
std::vector<Row> parse(std::string_view content);

std::string escape(std::string_view field);
// One record, terminated by LF.
std::string format_row(const Row& row);

}  // namespace summrec::csv
