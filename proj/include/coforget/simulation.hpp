#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "coforget/epoch.hpp"
#include "coforget/transport.hpp"
#include "coforget/workload.hpp"

namespace coforget {

/// Everything a run needs besides the epoch count.
struct RunConfig {
  ProtocolConfig protocol;
  std::vector<AgentProfile> agents;
  NetworkConfig network;
  WorkloadSpec workload;
};

/// Two planners (w = 1.5) and two perception agents (w = 1.0), all honest.
std::vector<AgentProfile> default_roster();

/// n generic agents "agent-1".."agent-n" with unit weight, or the default
/// roster when n is 4.
std::vector<AgentProfile> roster_for(int n_agents);

enum class Scenario { baseline_no_faults, byzantine_f1, cache_profile, custom };

std::string_view to_string(Scenario s);
std::optional<Scenario> parse_scenario(std::string_view text);

/// Zipf exponent used by the presets. With exponent 1.0 an LRU of 100 over
/// ~1000 live items sits near a 0.58 hit rate; 1.3 gives about 0.76 to 0.79.
inline constexpr double kPresetAccessSkew = 1.3;

/// Preset run configuration. `custom` is the plain defaults.
RunConfig scenario_config(Scenario s);

/// Every constraint violated by the run config, protocol checks first.
std::vector<ConfigViolation> check_run_config(const RunConfig& run);

/// Applies a flat `key = value` file on top of `base`. Besides the protocol
/// keys it accepts agent_ids, agent_weights, agent_confidences, agent_faults,
/// agent_active, network.* and workload.*. Unknown keys are a ConfigSyntax
/// error. Validation is left to check_run_config.
RunConfig apply_config_text(RunConfig base, std::string_view text);

/// Reads and applies a config file. A missing or unreadable file throws
/// ConfigSyntax naming the path.
RunConfig apply_config_file(RunConfig base, const std::filesystem::path& path);

/// Derives every seed (protocol, workload, network, fault coins) from one.
void apply_seed(RunConfig& run, std::uint64_t seed);

struct RunResult {
  std::vector<EpochReport> reports;
  std::vector<std::size_t> baseline_footprints;  // no-forgetting footprint after each epoch
  SummaryMetrics summary;
  StoreStats store_stats;
};

/// Interleaves workload interactions with an epoch every epoch_interactions
/// interactions. Arrivals are queued during an epoch and enter the store
/// after its deletions. Throws on an invalid run config or epochs == 0.
RunResult run_simulation(const RunConfig& run, std::size_t epochs, bool strict_pbft_success = false);

}  // namespace coforget
