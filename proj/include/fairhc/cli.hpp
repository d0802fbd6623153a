#pragma once

// Command-line front end. Exit codes: 0 success, 1 infeasible baseline,
// 2 input or usage error, 3 numerical failure.

#include <iosfwd>
#include <span>
#include <string>

namespace fairhc::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInfeasible = 1;
inline constexpr int kExitInput = 2;
inline constexpr int kExitNumerical = 3;

/// `args` excludes the program name. Results go to `out` unless --out names a
/// file; one-line diagnostics go to `err`.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

/// Applies FAIRHC_LOG (trace, debug, info, warn, error, off) to a stderr logger.
void init_logging();

}  // namespace fairhc::cli
