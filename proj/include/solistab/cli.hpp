#pragma once

#include <string>
#include <vector>

namespace solistab {

/// Exit codes of the command-line front end.
enum ExitCode : int { kExitOk = 0, kExitFail = 1, kExitUsage = 2, kExitNumerical = 3 };

/// Parses "a:b:step" into a, a + step, ... up to b, "x,y,z" into a list, or a single value.
std::vector<double> parse_range(const std::string& text);

/// Runs one subcommand; args excludes the program name.
int run_cli(const std::vector<std::string>& args);

}  // namespace solistab
