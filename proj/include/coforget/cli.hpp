#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

namespace coforget {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitIo = 3 };

struct RunManifest {
  std::optional<std::filesystem::path> config;
  std::string scenario = "baseline_no_faults";
  std::size_t epochs = 100;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> seeds;  // K runs with seeds seed, seed+1, ...
  std::filesystem::path out = "out";
  bool strict_pbft_success = false;
};

/// Runs the manifest and writes report.json, epochs.csv and audit.jsonl.
/// With `seeds` set, each run goes to a sibling directory `<out>_seed<N>`.
int cmd_run(const RunManifest& manifest, std::ostream& out, std::ostream& err);

/// Prints every violated constraint of the config file layered over the
/// defaults. 0 iff valid.
int cmd_validate(const std::filesystem::path& config, std::ostream& out, std::ostream& err);

}  // namespace coforget
