#pragma once

#include <string>
#include <vector>

namespace arcstep {

// Entry point behind the arcstep binary. Returns the process exit code:
//   0  success
//   2  argument or configuration validation failure
//   1  runtime failure (IO, numerical error)
// Subcommands: rate, hp, instability, inexact, parallel, game, equalize,
// schedule-measure, commute-check, potential.
int run_cli(const std::vector<std::string>& args);
int run_cli(int argc, char** argv);

} // namespace arcstep
