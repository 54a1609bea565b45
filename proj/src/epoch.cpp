#include "coforget/epoch.hpp"

#include <algorithm>
#include <map>
#include <set>

#include <fmt/format.h>

#include "coforget/decay.hpp"
#include "coforget/log.hpp"

namespace coforget {

namespace {
constexpr std::size_t kProposalChunk = 512;
}  // namespace

std::string_view to_string(ConsensusStatus status) {
  switch (status) {
    case ConsensusStatus::decided_forget: return "forget";
    case ConsensusStatus::decided_keep: return "keep";
    case ConsensusStatus::timeout: return "timeout";
  }
  return "?";
}

ForgettingCoordinator::ForgettingCoordinator(ProtocolConfig cfg, std::vector<Agent> agents,
                                             NetworkConfig network)
    : cfg_(validate_config(std::move(cfg))),
      agents_(std::move(agents)),
      net_(network),
      pbft_(kCoordinatorName, cfg_.f) {
  if (agents_.size() != static_cast<std::size_t>(cfg_.n_agents)) {
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("roster has {} agents, config says n_agents = {}", agents_.size(),
                            cfg_.n_agents));
  }
  std::sort(agents_.begin(), agents_.end(),
            [](const Agent& a, const Agent& b) { return a.profile.agent_id < b.profile.agent_id; });
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    const auto& p = agents_[i].profile;
    if (i > 0 && agents_[i - 1].profile.agent_id == p.agent_id) {
      throw Error(ErrorCode::InvalidParameter, fmt::format("duplicate agent id '{}'", p.agent_id));
    }
    if (p.agent_id.empty() || p.agent_id == kCoordinatorName) {
      throw Error(ErrorCode::InvalidParameter, fmt::format("invalid agent id '{}'", p.agent_id));
    }
    if (!(p.weight > 0.0) || !(p.confidence >= 0.0 && p.confidence <= 1.0)) {
      throw Error(ErrorCode::InvalidParameter,
                  fmt::format("agent '{}' needs weight > 0 and confidence in [0,1]", p.agent_id));
    }
    if (!agents_[i].scorer) agents_[i].scorer = default_scorer();
    coins_.emplace_back(p.fault);
    net_.add_node(p.agent_id);
  }
  net_.add_node(kCoordinatorName);
}

std::vector<AgentProfile> ForgettingCoordinator::profiles() const {
  std::vector<AgentProfile> out;
  out.reserve(agents_.size());
  for (const auto& a : agents_) out.push_back(a.profile);
  return out;
}

std::vector<std::vector<AgentVote>> ForgettingCoordinator::collect_votes(
    const std::vector<MemoryRecord>& memories, const std::vector<double>& decay,
    const ContextProfile& context) const {
  // Agents sharing a scorer and a context see identical relevance; score once.
  using Key = std::pair<const RelevanceScorer*, const ContextProfile*>;
  std::map<Key, std::vector<double>> relevance_by_view;

  std::vector<std::vector<AgentVote>> votes(memories.size());
  for (const auto& agent : agents_) {
    if (!agent.profile.active) continue;
    const ContextProfile* view = agent.context ? &*agent.context : &context;
    auto& rel = relevance_by_view[{agent.scorer.get(), view}];
    if (rel.empty()) {
      rel.reserve(memories.size());
      for (const auto& m : memories) rel.push_back(agent.scorer->score(m, *view));
    }
    for (std::size_t i = 0; i < memories.size(); ++i) {
      const auto formed = form_vote(decay[i], rel[i], cfg_);
      votes[i].push_back(
          AgentVote{agent.profile.agent_id, memories[i].id, formed.vote, formed.combined_score});
    }
  }
  return votes;
}

EpochReport ForgettingCoordinator::run_epoch(MemoryStore& store, const ContextProfile& context,
                                             Timestamp now, std::uint64_t epoch_index) {
  EpochReport report;
  report.epoch_index = epoch_index;

  const auto memories = store.snapshot();
  report.memories_start = memories.size();

  // Phase 1: decay.
  std::vector<double> decay;
  decay.reserve(memories.size());
  for (const auto& m : memories) {
    const auto d = decay_score(m.t_last, now, cfg_);
    if (d.high_variance) {
      ++report.high_variance;
      logger().warn("high variance in decay scores for {}: {:.4f}", m.id, d.variance);
    }
    if (d.proposal == DecayProposal::propose_forget) ++report.decay_proposals;
    decay.push_back(d.combined);
  }

  // Phase 2: votes, with each agent's forget set proposed to the coordinator.
  const auto votes = collect_votes(memories, decay, context);
  std::map<std::string, std::vector<std::string>> forget_by_agent;
  for (const auto& per_memory : votes) {
    for (const auto& v : per_memory) {
      if (v.vote == Vote::forget) forget_by_agent[v.agent_id].push_back(v.memory_id);
    }
  }
  proposals_.clear();
  InProcessChannel channel(&proposals_);
  std::set<std::string> proposed;
  for (const auto& [agent_id, ids] : forget_by_agent) {
    // Chunked so a long list stays under the frame size limit.
    const std::span<const std::string> all(ids);
    for (std::size_t at = 0; at < all.size(); at += kProposalChunk) {
      const auto chunk = all.subspan(at, std::min(kProposalChunk, all.size() - at));
      for (auto& id : propose_forgetting(chunk, agent_id, channel, epoch_index)) {
        proposed.insert(std::move(id));
      }
    }
  }
  report.proposed = proposed.size();

  // Phase 3: one consensus instance per proposed memory.
  std::map<std::string, std::size_t> position;
  for (std::size_t i = 0; i < memories.size(); ++i) position.emplace(memories[i].id, i);

  const auto profiles = this->profiles();
  const std::size_t budget =
      static_cast<std::size_t>(cfg_.pbft_budget_factor) * static_cast<std::size_t>(cfg_.n_agents);
  std::vector<std::string> final_set;
  double elapsed_ms = 0.0;

  for (const auto& memory_id : proposed) {
    const auto idx = position.at(memory_id);
    const auto& memory_votes = votes[idx];

    std::vector<RoundParticipant> participants;
    for (std::size_t a = 0; a < agents_.size(); ++a) {
      if (!agents_[a].profile.active) continue;
      const auto& id = agents_[a].profile.agent_id;
      auto vote = std::find_if(memory_votes.begin(), memory_votes.end(),
                               [&](const AgentVote& v) { return v.agent_id == id; });
      participants.push_back({id, vote->vote, coins_[a].next_round()});
    }

    const auto round =
        run_pbft_round(net_, pbft_, participants, memory_id, epoch_index, cfg_.f, budget);
    elapsed_ms += round.finished_ms - round.started_ms;

    AuditEntry audit;
    audit.epoch = epoch_index;
    audit.memory_id = memory_id;
    audit.decay = decay[idx];
    audit.votes = memory_votes;
    audit.commit_forget = round.commit_tally_forget;
    audit.commit_keep = round.commit_tally_keep;
    for (const auto& [id, behavior] : round.behaviors) {
      if (behavior == RoundBehavior::silent) audit.silent_agents.push_back(id);
      if (behavior == RoundBehavior::equivocate) audit.equivocating_agents.push_back(id);
    }

    // Quorum roster for this round: silent agents drop out of both Q and S_m
    // unless configured to count as active.
    auto roster = profiles;
    if (!cfg_.silent_counts_active) {
      for (auto& p : roster) {
        if (std::find(audit.silent_agents.begin(), audit.silent_agents.end(), p.agent_id) !=
            audit.silent_agents.end()) {
          p.active = false;
        }
      }
    }
    audit.s_m = weighted_forget_score(memory_votes, roster);
    const bool any_active =
        std::any_of(roster.begin(), roster.end(), [](const AgentProfile& p) { return p.active; });
    audit.q = any_active ? quorum_threshold(roster, cfg_.alpha) : 0.0;

    if (round.timed_out) {
      audit.consensus = ConsensusStatus::timeout;
      ++report.consensus_failed;
      logger().info("epoch {}: no consensus on {}, retained until next epoch", epoch_index,
                    memory_id);
    } else {
      ++report.consensus_reached;
      audit.consensus = *round.decision == Vote::forget ? ConsensusStatus::decided_forget
                                                        : ConsensusStatus::decided_keep;
      if (audit.consensus == ConsensusStatus::decided_forget && any_active) {
        audit.decision = decide(audit.s_m, audit.q);
      }
    }
    if (audit.decision == Vote::forget) {
      audit.deleted = true;
      final_set.push_back(memory_id);
    }
    report.per_memory_audit.push_back(std::move(audit));
  }

  // Phase 4: commit deletions.
  if (!final_set.empty()) {
    report.deleted = store.erase(final_set);
    logger().info("epoch {}: deleted {} memories", epoch_index, report.deleted);
  }
  report.memories_end = report.memories_start - report.deleted;
  report.deletion_rate = report.memories_start == 0
                             ? 0.0
                             : static_cast<double>(report.deleted) /
                                   static_cast<double>(report.memories_start);
  report.elapsed_virtual_s = elapsed_ms / 1000.0;
  return report;
}

}  // namespace coforget
