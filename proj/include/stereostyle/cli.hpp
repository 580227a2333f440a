#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace stereostyle {

/// Process exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 2,      // bad flags, missing or malformed inputs, shape mismatches
  kExitDivergence = 3  // non-finite values during optimization
};

/// Runs the command-line tool. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Shortest round-trip decimal form of `v`, always containing a '.' or an
/// exponent ("0.0", "1.0", "0.125").
std::string format_decimal(double v);

}  // namespace stereostyle
