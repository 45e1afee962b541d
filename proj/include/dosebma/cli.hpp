#pragma once

#include <string>
#include <vector>

namespace dosebma::cli {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes: 0 success, 1 usage error, 2 data/validation error,
// 3 numerical non-convergence. Diagnostics go to stderr.
int dispatch(const std::vector<std::string>& args);

}  // namespace dosebma::cli
