// Apache License, Version 2.0, refer to LICENSE.txt

#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace hoopstat {

// Exit codes of the hoopstat executable.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;  // data or runtime error
inline constexpr int kExitUsage = 2;    // invalid flags or configuration

// Runs one subcommand. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hoopstat
