#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace boxloss {

/// Exit codes of the command-line tool.
enum ExitCode : int {
  kExitOk = 0,
  kExitVerificationFailed = 1,
  kExitUsage = 2,
};

/// Runs the tool with `args` (program name excluded). Single evaluations
/// print JSON to `out`; diagnostics go to `err`; everything else is
/// written under --out.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace boxloss
