#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "coforget/consensus.hpp"
#include "coforget/proposal.hpp"
#include "coforget/relevance.hpp"
#include "coforget/store.hpp"
#include "coforget/transport.hpp"
#include "coforget/voting.hpp"

namespace coforget {

/// A voting agent: its profile plus how it judges relevance. Without its own
/// context the agent scores against the shared epoch context.
struct Agent {
  AgentProfile profile;
  std::shared_ptr<const RelevanceScorer> scorer = default_scorer();
  std::optional<ContextProfile> context;
};

enum class ConsensusStatus { decided_forget, decided_keep, timeout };

std::string_view to_string(ConsensusStatus status);

/// Record of one consensus instance, kept for every proposed memory.
struct AuditEntry {
  std::uint64_t epoch = 0;
  std::string memory_id;
  double decay = 0.0;
  std::vector<AgentVote> votes;  // phase-2 votes from active agents
  ConsensusStatus consensus = ConsensusStatus::timeout;
  std::size_t commit_forget = 0;  // coordinator commit tallies
  std::size_t commit_keep = 0;
  std::vector<std::string> silent_agents;
  std::vector<std::string> equivocating_agents;
  double s_m = 0.0;
  double q = 0.0;
  Vote decision = Vote::keep;
  bool deleted = false;
};

struct EpochReport {
  std::uint64_t epoch_index = 0;
  std::size_t memories_start = 0;
  std::size_t additions = 0;
  std::size_t memories_end = 0;
  std::size_t proposed = 0;
  std::size_t consensus_reached = 0;
  std::size_t consensus_failed = 0;
  std::size_t deleted = 0;
  double deletion_rate = 0.0;
  double elapsed_virtual_s = 0.0;
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
  std::size_t decay_proposals = 0;  // memories with combined decay below delta
  std::size_t high_variance = 0;
  std::vector<AuditEntry> per_memory_audit;
};

/// Runs forgetting epochs for a fixed roster over a simulated network.
///
/// Each epoch scores a fixed snapshot of the store: decay per memory, one
/// vote per (active agent, memory), proposals sent to the coordinator over
/// the frame codec, one PBFT instance per proposed memory, and finally
/// deletion of memories whose consensus was forget and whose weighted
/// forget score reached the quorum. Iteration is by agent id, then by
/// memory id, so results do not depend on container order.
class ForgettingCoordinator {
 public:
  /// Throws on an invalid config, a roster whose size differs from
  /// n_agents, or duplicate agent ids.
  ForgettingCoordinator(ProtocolConfig cfg, std::vector<Agent> agents, NetworkConfig network);

  EpochReport run_epoch(MemoryStore& store, const ContextProfile& context, Timestamp now,
                        std::uint64_t epoch_index);

  const ProtocolConfig& config() const { return cfg_; }
  const std::vector<Agent>& agents() const { return agents_; }
  std::vector<AgentProfile> profiles() const;
  const SimNetwork& network() const { return net_; }
  static constexpr const char* kCoordinatorName = "coordinator";

 private:
  std::vector<std::vector<AgentVote>> collect_votes(const std::vector<MemoryRecord>& memories,
                                                    const std::vector<double>& decay,
                                                    const ContextProfile& context) const;

  ProtocolConfig cfg_;
  std::vector<Agent> agents_;
  std::vector<FaultCoin> coins_;
  SimNetwork net_;
  PbftCoordinator pbft_;
  ProposalService proposals_;
};

}  // namespace coforget
