#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace oprisk::cli {

// Exit codes: 0 success, 1 domain error, 2 input error.
inline constexpr int kExitOk = 0;
inline constexpr int kExitDomain = 1;
inline constexpr int kExitInput = 2;

// Runs the command line `args` (args[0] is the program name). Results go to
// `out`, diagnostics and warnings to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

// Formats v with comma thousands separators and `decimals` fraction digits.
std::string grouped(double v, int decimals = 2);

}  // namespace oprisk::cli
