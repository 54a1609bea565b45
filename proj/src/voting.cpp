#include "coforget/voting.hpp"

#include <algorithm>

#include <fmt/format.h>

namespace coforget {

VoteFormation form_vote(double decay, double relevance, const ProtocolConfig& cfg) {
  const double c = cfg.omega_d * decay + cfg.omega_r * relevance;
  return {c < cfg.vote_threshold ? Vote::forget : Vote::keep, c};
}

double quorum_threshold(std::span<const AgentProfile> agents, double alpha) {
  double total = 0.0;
  bool any = false;
  for (const auto& a : agents) {
    if (!a.active) continue;
    total += a.weight;
    any = true;
  }
  if (!any) throw Error(ErrorCode::NoActiveAgents, "quorum needs at least one active agent");
  return alpha * total;
}

double weighted_forget_score(std::span<const AgentVote> votes,
                             std::span<const AgentProfile> agents) {
  double s = 0.0;
  for (const auto& v : votes) {
    auto it = std::find_if(agents.begin(), agents.end(),
                           [&](const AgentProfile& a) { return a.agent_id == v.agent_id; });
    if (it == agents.end()) {
      throw Error(ErrorCode::UnknownAgent, fmt::format("vote from unknown agent '{}'", v.agent_id));
    }
    if (!it->active || v.vote != Vote::forget) continue;
    s += it->weight * it->confidence;
  }
  return s;
}

QuorumDecision quorum_decision(std::span<const AgentVote> votes,
                               std::span<const AgentProfile> agents, double alpha) {
  QuorumDecision d;
  d.s_m = weighted_forget_score(votes, agents);
  d.q = quorum_threshold(agents, alpha);
  d.outcome = decide(d.s_m, d.q);
  return d;
}

}  // namespace coforget
