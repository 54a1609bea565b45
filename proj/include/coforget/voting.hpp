#pragma once

#include <span>
#include <string>

#include "coforget/core.hpp"

namespace coforget {

struct AgentVote {
  std::string agent_id;
  std::string memory_id;
  Vote vote = Vote::keep;
  double combined_score = 1.0;
};

struct VoteFormation {
  Vote vote = Vote::keep;
  double combined_score = 1.0;
};

struct QuorumDecision {
  double s_m = 0.0;
  double q = 0.0;
  Vote outcome = Vote::keep;
};

/// C = omega_d * decay + omega_r * relevance; forget iff C < vote_threshold.
/// C equal to the threshold keeps.
VoteFormation form_vote(double decay, double relevance, const ProtocolConfig& cfg);

/// alpha times the summed weight of active agents.
/// Throws NoActiveAgents when nobody is active.
double quorum_threshold(std::span<const AgentProfile> agents, double alpha);

/// Sum of weight * confidence over active agents voting forget. Votes from
/// inactive agents are ignored. Throws UnknownAgent for an unresolvable id.
double weighted_forget_score(std::span<const AgentVote> votes,
                             std::span<const AgentProfile> agents);

/// forget iff s_m >= q; the boundary forgets.
constexpr Vote decide(double s_m, double q) noexcept {
  return s_m >= q ? Vote::forget : Vote::keep;
}

QuorumDecision quorum_decision(std::span<const AgentVote> votes,
                               std::span<const AgentProfile> agents, double alpha);

}  // namespace coforget
