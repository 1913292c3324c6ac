#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sb {

/// Exit codes of the command-line front end.
enum ExitCode : int { exit_ok = 0, exit_usage = 2, exit_constraint = 3, exit_diagnostic = 4 };

/// Runs the `singular-bound` command line. `args` excludes the program
/// name. Normal output goes to `out`, messages to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace sb
