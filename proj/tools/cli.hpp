#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace tempfit::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitNumeric = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command line (without the program name). Returns the process
/// exit code: 0 success, 1 numeric failure, 2 usage or input error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace tempfit::cli
