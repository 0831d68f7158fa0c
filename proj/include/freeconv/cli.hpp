#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace freeconv {

/// Exit codes: 0 success, 1 configuration error, 2 partial numerical failure.
enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitPartial = 2 };

/// Parses "lo:hi:points" into an evenly spaced grid. Throws DomainError.
std::vector<double> parse_grid(const std::string& text);

/// Command-line entry point; argv[0] is the program name.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace freeconv
