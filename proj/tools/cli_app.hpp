#pragma once

#include <iosfwd>

namespace frontrun::cli {

/// Runs the command line front end. Returns the process exit code:
/// 0 success, 1 configuration error, 2 I/O error, 3 numerical failure
/// (and for `verify`, 1 when any criterion fails).
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace frontrun::cli
