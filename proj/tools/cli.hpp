#pragma once

#include <iosfwd>

namespace uavrelay::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitUsage = 2;

/// Overrides the configured output directory when set.
inline constexpr const char* kOutputDirEnv = "UAVRELAY_OUTPUT_DIR";

/// Subcommands: solve, simulate, sweep, init-config. Returns the exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace uavrelay::cli
