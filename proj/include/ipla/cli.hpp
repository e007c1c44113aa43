#pragma once

#include <iosfwd>

namespace ipla {

inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitIo = 3;

/// Entry point of the `ipla` command: subcommands run, theory, prox-bench.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ipla
