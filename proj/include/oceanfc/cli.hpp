#pragma once

#include <string>
#include <vector>

namespace oceanfc {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitRuntime = 3;

/// Runs one subcommand (`synth`, `stats`, `climatology`, `train`, `forecast`,
/// `evaluate`). `args` excludes the program name. Returns the exit code.
int run_cli(const std::vector<std::string>& args);

}  // namespace oceanfc
