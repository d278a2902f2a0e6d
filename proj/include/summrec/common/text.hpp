#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace summrec {

// Throws DecodingError at the first malformed UTF-8 sequence.
void validate_utf8(std::string_view text);

// Decodes one code point starting at `pos` and advances `pos`. Input must be
// valid UTF-8.
char32_t next_code_point(std::string_view text, std::size_t& pos);
void append_utf8(std::string& out, char32_t cp);

bool is_letter(char32_t cp);
char32_t to_lower(char32_t cp);
std::string to_lower(std::string_view text);

// Collapses every whitespace run to a single space and trims both ends.
std::string normalize_whitespace(std::string_view text);
std::string_view trim(std::string_view text);
std::vector<std::string_view> split_lines(std::string_view text);
bool iequals(std::string_view a, std::string_view b);

// UTF-32 round trip for std::wregex, whose character classes must see whole
// code points rather than UTF-8 bytes. wchar_t is 32 bits on the supported
// platforms.
std::wstring to_wide(std::string_view text);
std::string from_wide(std::wstring_view text);

}  // namespace summrec
