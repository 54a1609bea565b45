#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace coforget {

enum class ErrorCode {
  // configuration
  InvalidQuorumFraction,
  FaultBoundViolation,
  WeightSumViolation,
  LengthMismatch,
  InvalidParameter,
  ConfigSyntax,
  // scoring and voting
  NegativeAge,
  DimensionMismatch,
  NoActiveAgents,
  UnknownAgent,
  // consensus
  DuplicateInstance,
  StaleEpoch,
  ConsensusTimeout,
  // transport
  UnknownDestination,
  TruncatedFrame,
  UnknownMessageKind,
  OversizeFrame,
  MalformedFrame,
  ProposalTimeout,
  TransportClosed,
  // storage and workload
  EmptyIndex,
  EmptyPopulation,
  Io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

using Embedding = std::vector<double>;

/// Simulated-clock seconds. Never wall time.
using Timestamp = double;

enum class Vote : std::uint8_t { keep = 0, forget = 1 };

constexpr Vote invert(Vote v) noexcept {
  return v == Vote::keep ? Vote::forget : Vote::keep;
}
std::string_view to_string(Vote v);

struct MemoryRecord {
  std::string id;
  Embedding embedding;
  std::string agent_id;
  Timestamp t_last = 0.0;
  double salience = 0.0;  // persisted, never scored
};

// Records are identified by id; use same_contents() for a field-wise check.
inline bool operator==(const MemoryRecord& a, const MemoryRecord& b) {
  return a.id == b.id;
}
bool same_contents(const MemoryRecord& a, const MemoryRecord& b);

enum class FaultKind : std::uint8_t {
  honest,
  silent_half,           // no outbound messages in half the rounds
  equivocate_half,       // inverted vote in half the rounds
  silent_or_equivocate,  // every round faulty: half silent, half inverted
};

std::string_view to_string(FaultKind kind);
std::optional<FaultKind> parse_fault_kind(std::string_view text);

struct FaultProfile {
  FaultKind kind = FaultKind::honest;
  std::uint64_t coin_seed = 0;
};

struct AgentProfile {
  std::string agent_id;
  double weight = 1.0;
  double confidence = 1.0;
  bool active = true;
  FaultProfile fault;
};

struct ProtocolConfig {
  int n_agents = 4;
  int f = 1;
  double alpha = 2.0 / 3.0;
  std::vector<double> decay_scales{10.0, 60.0, 3600.0};
  std::vector<double> decay_weights{0.2, 0.3, 0.5};
  double decay_threshold = 0.3;
  double variance_warn = 0.1;
  double omega_d = 0.4;
  double omega_r = 0.6;
  double vote_threshold = 0.4;
  int epoch_interactions = 100;
  std::size_t cache_capacity = 100;
  std::size_t batch_size = 50;
  double batch_interval_s = 10.0;
  std::uint64_t rng_seed = 1;

  std::size_t dimension = 768;
  // Per-instance delivery budget is pbft_budget_factor * n_agents.
  int pbft_budget_factor = 10;
  // Whether an agent that is silent in a round still counts toward Q.
  bool silent_counts_active = true;
};

struct ConfigViolation {
  ErrorCode code;
  std::string message;
};

/// Every violated constraint, in check order. Empty means valid.
std::vector<ConfigViolation> check_config(const ProtocolConfig& cfg);

/// Returns cfg unchanged if valid; otherwise throws Error carrying the first
/// violation.
ProtocolConfig validate_config(ProtocolConfig cfg);

/// Parsed `key = value` text. Blank lines and `#` comments are skipped.
/// Later duplicates are a ConfigSyntax error.
using KeyValueMap = std::map<std::string, std::string, std::less<>>;
KeyValueMap parse_key_values(std::string_view text);

/// Reals accept plain decimal or `a/b` rationals ("2/3").
double parse_real(std::string_view key, std::string_view text);
std::int64_t parse_integer(std::string_view key, std::string_view text);
bool parse_bool(std::string_view key, std::string_view text);
std::vector<double> parse_real_list(std::string_view key, std::string_view text);
std::vector<std::string> parse_string_list(std::string_view text);

/// Applies protocol keys from kv onto cfg, consuming them from kv.
void apply_protocol_keys(ProtocolConfig& cfg, KeyValueMap& kv);

}  // namespace coforget
