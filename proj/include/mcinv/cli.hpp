#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace mcinv {

inline constexpr const char* kVersion = "0.1.0";

/// Exit statuses of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,    // bad flags, malformed config or input files
  kExitFailure = 2,  // numerical or solver failure, I/O failure, failed certificate
};

/// Runs the command line `args` (without the program name).
int runCli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace mcinv
