#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sophie::cli {

// Exit codes shared by every subcommand.
inline constexpr int kOk = 0;
inline constexpr int kEnvironmentError = 1;
inline constexpr int kValidationError = 2;

/// Runs the command line `args` (without the program name). Interactive input
/// comes from `in`; results go to `out`, diagnostics to `err`.
int run(const std::vector<std::string>& args, std::istream& in, std::ostream& out, std::ostream& err);

} // namespace sophie::cli
