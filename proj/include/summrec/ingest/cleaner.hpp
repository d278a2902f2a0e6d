#pragma once

#include <string>
#include <string_view>

namespace summrec::ingest {

// Removes extraction debris: page-number and table-ruling lines, runs of
// repeated punctuation, and whitespace-delimited glyph clusters that contain
// no letters or digits. Tokens with letters are never rewritten (no spelling
// correction). Surviving lines are trimmed, internal space runs collapsed, and
// joined with '\n'.
std::string clean_artifacts(std::string_view raw_text);

}  // namespace summrec::ingest
