#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cftm::cli {

/// Runs one command line (arguments after the program name). Returns the
/// process exit code; errors are reported on `err` as a single line
/// "error: code=<code> message=<text>".
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cftm::cli
