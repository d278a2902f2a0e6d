#pragma once

#include <string>
#include <string_view>

namespace summrec::preprocess {

// Porter stemmer, following the ANSI C reference implementation (including
// its "bli"->"ble" and "logi"->"log" departures from the 1980 description).
// Expects a lowercase word; words of one or two letters are returned as is.
std::string porter_stem(std::string_view word);

}  // namespace summrec::preprocess
