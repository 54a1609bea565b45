#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "coforget/message.hpp"
#include "coforget/voting.hpp"

namespace coforget {

class SimNetwork;

enum class PbftPhase { idle, prepared, committed, decided };

std::string_view to_string(PbftPhase phase);

/// Consensus state for one (memory, epoch) as seen by one participant.
///
/// A vote is prepared once 2f distinct senders PREPARE it, and decided once
/// 2f+1 distinct senders COMMIT it. With f = 0 the first PREPARE prepares.
/// Tallies are sender sets, so repeated messages from a sender are no-ops.
class PbftInstance {
 public:
  PbftInstance(std::string memory_id, std::uint64_t epoch, int f);

  /// True exactly when this message first takes some vote to the prepare
  /// threshold while idle. Throws StaleEpoch on an epoch mismatch.
  bool on_prepare(const PbftMessage& msg);

  /// The decision, exactly when this message first takes some vote to the
  /// commit threshold. Throws StaleEpoch on an epoch mismatch.
  std::optional<Vote> on_commit(const PbftMessage& msg);

  /// Record that the owner has broadcast its COMMIT.
  void mark_committed();

  const std::string& memory_id() const { return memory_id_; }
  std::uint64_t epoch() const { return epoch_; }
  int f() const { return f_; }
  PbftPhase phase() const { return phase_; }
  std::optional<Vote> decision() const { return decision_; }
  bool prepared() const { return prepared_; }

  std::size_t prepare_threshold() const;
  std::size_t commit_threshold() const;
  std::size_t prepare_count(Vote v) const { return prepare_[index(v)].size(); }
  std::size_t commit_count(Vote v) const { return commit_[index(v)].size(); }
  const std::set<std::string>& commit_senders(Vote v) const { return commit_[index(v)]; }

 private:
  static std::size_t index(Vote v) { return v == Vote::keep ? 0 : 1; }
  void check(const PbftMessage& msg, MessageKind expected) const;

  std::string memory_id_;
  std::uint64_t epoch_;
  int f_;
  PbftPhase phase_ = PbftPhase::idle;
  bool prepared_ = false;
  std::optional<Vote> decision_;
  std::array<std::set<std::string>, 2> prepare_;
  std::array<std::set<std::string>, 2> commit_;
};

/// What a participant does for the whole of one round.
enum class RoundBehavior { honest, silent, equivocate };

struct Envelope {
  std::string to;
  PbftMessage msg;
};

/// One voting agent's side of a single consensus instance.
///
/// On EVALUATE it broadcasts PREPARE with its vote (inverted when
/// equivocating). Once prepared, it broadcasts COMMIT carrying its own vote
/// rather than the prepared one. A silent participant emits nothing.
class Replica {
 public:
  Replica(std::string agent_id, std::string memory_id, std::uint64_t epoch, int f,
          Vote honest_vote, RoundBehavior behavior, std::vector<std::string> peers,
          std::string coordinator);

  std::vector<Envelope> on_message(const PbftMessage& msg);

  const std::string& agent_id() const { return agent_id_; }
  const PbftInstance& instance() const { return instance_; }
  std::optional<Vote> decision() const { return instance_.decision(); }
  RoundBehavior behavior() const { return behavior_; }
  Vote sent_vote() const;

 private:
  void broadcast(std::vector<Envelope>& out, MessageKind kind, bool include_coordinator) const;
  void maybe_commit(std::vector<Envelope>& out);

  std::string agent_id_;
  PbftInstance instance_;
  Vote honest_vote_;
  RoundBehavior behavior_;
  std::vector<std::string> peers_;
  std::string coordinator_;
  bool evaluated_ = false;
  bool commit_sent_ = false;
};

struct InstanceStart {
  std::vector<Envelope> evaluate;  // one EVALUATE per active agent
  bool undecidable = false;        // fewer than 2f+1 participants
};

/// Non-voting orchestrator. Starts instances and observes COMMIT traffic to
/// learn decisions.
class PbftCoordinator {
 public:
  PbftCoordinator(std::string name, int f);

  /// Throws DuplicateInstance while an instance for (memory_id, epoch) is live.
  InstanceStart start_instance(const std::string& memory_id, std::uint64_t epoch,
                               std::span<const std::string> active_agents);

  std::optional<Vote> on_commit(const PbftMessage& msg);

  const PbftInstance* find(const std::string& memory_id, std::uint64_t epoch) const;
  void close_instance(const std::string& memory_id, std::uint64_t epoch);

  const std::string& name() const { return name_; }
  std::size_t live_instances() const { return live_.size(); }

 private:
  std::string name_;
  int f_;
  std::map<std::pair<std::string, std::uint64_t>, PbftInstance> live_;
};

struct RoundParticipant {
  std::string agent_id;
  Vote honest_vote = Vote::keep;
  RoundBehavior behavior = RoundBehavior::honest;
};

struct PbftRoundResult {
  std::optional<Vote> decision;  // the coordinator's view
  bool timed_out = false;
  bool undecidable = false;
  std::map<std::string, std::optional<Vote>> replica_decisions;
  std::map<std::string, RoundBehavior> behaviors;
  std::size_t commit_tally_forget = 0;  // coordinator's view at the end
  std::size_t commit_tally_keep = 0;
  std::size_t deliveries = 0;
  std::size_t stale = 0;
  double started_ms = 0.0;
  double finished_ms = 0.0;
};

/// Drives one instance to completion over the simulated network. Delivery
/// stops when the queue drains or `delivery_budget` deliveries have happened;
/// an undecided coordinator at that point is a timeout.
PbftRoundResult run_pbft_round(SimNetwork& net, PbftCoordinator& coordinator,
                               std::span<const RoundParticipant> participants,
                               const std::string& memory_id, std::uint64_t epoch, int f,
                               std::size_t delivery_budget);

/// Coordinator-side final decision: keep unless the instance decided forget
/// and the weighted forget score reaches the quorum threshold. An undecided
/// instance throws ConsensusTimeout (callers keep the memory).
Vote finalize(const PbftInstance& instance, std::span<const AgentVote> votes,
              std::span<const AgentProfile> agents, const ProtocolConfig& cfg);

}  // namespace coforget
