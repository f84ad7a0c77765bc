#pragma once

#include <ostream>

namespace topoguard::cli {

// Exit codes.
inline constexpr int kOk = 0;
inline constexpr int kConfigError = 2;
inline constexpr int kDataError = 3;
inline constexpr int kNumericError = 4;

// Entry point of the `topoguard` command; argv[0] is the program name.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace topoguard::cli
