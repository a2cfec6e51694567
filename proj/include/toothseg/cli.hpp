#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace toothseg {

/// Runs the toothseg command line. args excludes the program name.
/// Exit codes: 0 success, 1 usage or input error, 2 internal error.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace toothseg
