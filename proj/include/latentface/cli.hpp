#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace latentface {

/// Process exit codes.
enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 2,       // bad arguments or shapes
    kExitIo = 3,          // unreadable, unwritable or malformed files
    kExitNumeric = 4,
    kExitInvariant = 5,
};

/// Runs one command line (args[0] is the program name). Normal output goes
/// to `out`; failures are reported as one JSON object per line on `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace latentface
