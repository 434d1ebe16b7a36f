#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ledloc::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 2,
  kInputError = 3,
  kRuntimeError = 4,
};

/// Parses `args` (without the program name) and runs the selected
/// subcommand. Diagnostics go to `err`; data only to the --out files.
int run(const std::vector<std::string>& args, std::ostream& err);

} // namespace ledloc::cli
