#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace ethomap::cli {

/// Runs one command line (args[0] is the program name). Returns the process exit
/// code: 0 success, 2 rejected input, 1 runtime failure.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

} // namespace ethomap::cli
