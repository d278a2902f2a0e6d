#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace summrec {

// Data files compiled into the binary (rule sets, lexicons, language corpora,
// stopword lists). Returns nullopt for unknown names.
std::optional<std::string_view> embedded_resource(std::string_view name);

// Loads `name` from the directory named by SUMMREC_DATA_DIR when that variable
// is set and the file exists there, otherwise from the embedded copy.
// Throws NotFoundError if neither exists.
std::string load_resource(std::string_view name);

// Splits a data file into entries: one per line, `#` starts a comment,
// surrounding whitespace trimmed, blank lines skipped.
std::vector<std::string> resource_lines(std::string_view content);

}  // namespace summrec
