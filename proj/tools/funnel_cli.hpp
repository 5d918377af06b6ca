#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace funnel::cli {

inline constexpr const char* kToolVersion = "0.1.0";

/// Exit codes: 0 success, 1 runtime or divergence failure, 2 configuration error.
enum ExitCode : int { kSuccess = 0, kRuntimeError = 1, kConfigError = 2 };

/// Runs the command line `args` (without the program name).
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace funnel::cli
