#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace modeboost {

/// Exit status of a command: success, domain error, usage error.
enum ExitCode : int { kExitOk = 0, kExitDomain = 1, kExitUsage = 2 };

/// Runs one command line (without the program name). Messages go to `err`,
/// results meant for the terminal to `out`.
int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace modeboost
