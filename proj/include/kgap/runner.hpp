#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace kgap {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitNumerical = 3, kExitFalsified = 4 };

struct RunOptions {
  std::filesystem::path config;
  std::optional<std::filesystem::path> out_dir;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool no_cache = false;
};

const std::vector<std::string>& subcommands();

// Runs one pipeline and writes manifest.json plus its outputs under the output
// directory. Never throws; the exit code carries the outcome.
int run_subcommand(const std::string& name, const RunOptions& opts, std::ostream& log);

}  // namespace kgap
