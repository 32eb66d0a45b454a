#pragma once

#include <iosfwd>

namespace absorb {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitData = 1, kExitUsage = 2, kExitUnconverged = 3 };

/// Entry point for `absorb fit|impact|simulate|generate`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace absorb
