#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace costcal::cli {

/// Runs one command line (without the program name). Returns the exit code:
/// 0 success, 1 runtime failure, 2 input or validation error.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses "10,20,30" or "10:3,20:3" into size vectors (one per element,
/// ':' separating the sizes of successive sized input arguments).
std::vector<std::vector<long long>> parse_sizes(const std::string& text);

}  // namespace costcal::cli
