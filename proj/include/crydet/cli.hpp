#pragma once

#include <iosfwd>

namespace crydet::cli {

// Exit codes: 0 success, 1 runtime failure, 2 usage/config error.
constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run(int argc, const char* const* argv);

}  // namespace crydet::cli
