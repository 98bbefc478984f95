#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace invgen {

enum ExitCode : int {
    kExitPass = 0,
    kExitVerificationFailure = 1,
    kExitInputError = 2,
    kExitNumericalBreakdown = 3,
};

/// Runs the command line front end. `args` excludes the program name. Human
/// readable text goes to `out`, diagnostics to `err`; machine-readable JSONL
/// goes to the path given by --output.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace invgen
