#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace summrec::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitDomainError = 1;
inline constexpr int kExitUsage = 2;

// `args[0]` is the program name. Machine output goes to `out`, diagnostics
// and usage text to `err`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace summrec::cli
