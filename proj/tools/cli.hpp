#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace medkit::cli {

enum ExitCode : int { kOk = 0, kComputationError = 1, kUsageError = 2 };

/// Runs the command line tool. `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Parses a comma separated variable list; "" and "{}" are the empty set.
std::vector<std::string> parse_var_list(const std::string& text);

}  // namespace medkit::cli
