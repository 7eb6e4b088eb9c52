#pragma once

#include <iosfwd>

namespace tradescan::cli {

// Environment variable naming the default output directory.
inline constexpr const char* kOutDirEnv = "TRADESCAN_OUT_DIR";

// Parses argv, runs the selected subcommand and returns the process exit code.
int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tradescan::cli
