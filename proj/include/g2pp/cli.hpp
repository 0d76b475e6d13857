#pragma once

#include <iosfwd>

namespace g2pp {

/// Command-line entry point. Returns the process exit code:
/// 0 success, 1 numeric or convergence failure, 2 input error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace g2pp
