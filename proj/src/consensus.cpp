#include "coforget/consensus.hpp"

#include <algorithm>

#include <fmt/format.h>

#include "coforget/transport.hpp"

namespace coforget {

std::string_view to_string(PbftPhase phase) {
  switch (phase) {
    case PbftPhase::idle: return "idle";
    case PbftPhase::prepared: return "prepared";
    case PbftPhase::committed: return "committed";
    case PbftPhase::decided: return "decided";
  }
  return "?";
}

PbftInstance::PbftInstance(std::string memory_id, std::uint64_t epoch, int f)
    : memory_id_(std::move(memory_id)), epoch_(epoch), f_(f) {
  if (f < 0) throw Error(ErrorCode::InvalidParameter, "fault bound must be non-negative");
}

std::size_t PbftInstance::prepare_threshold() const {
  return std::max<std::size_t>(1, 2 * static_cast<std::size_t>(f_));
}

std::size_t PbftInstance::commit_threshold() const {
  return 2 * static_cast<std::size_t>(f_) + 1;
}

void PbftInstance::check(const PbftMessage& msg, MessageKind expected) const {
  if (msg.kind != expected || !msg.vote) {
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("expected {} with a vote, got {}", to_string(expected),
                            to_string(msg.kind)));
  }
  if (msg.memory_id != memory_id_) {
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("message for '{}' routed to instance '{}'", msg.memory_id, memory_id_));
  }
  if (msg.epoch != epoch_) {
    throw Error(ErrorCode::StaleEpoch,
                fmt::format("message epoch {} != instance epoch {}", msg.epoch, epoch_));
  }
}

bool PbftInstance::on_prepare(const PbftMessage& msg) {
  check(msg, MessageKind::prepare);
  auto& senders = prepare_[index(*msg.vote)];
  if (!senders.insert(msg.sender).second) return false;
  if (prepared_ || senders.size() < prepare_threshold()) return false;
  prepared_ = true;
  if (phase_ == PbftPhase::idle) phase_ = PbftPhase::prepared;
  return true;
}

std::optional<Vote> PbftInstance::on_commit(const PbftMessage& msg) {
  check(msg, MessageKind::commit);
  auto& senders = commit_[index(*msg.vote)];
  if (!senders.insert(msg.sender).second) return std::nullopt;
  if (decision_ || senders.size() < commit_threshold()) return std::nullopt;
  decision_ = *msg.vote;
  phase_ = PbftPhase::decided;
  return decision_;
}

void PbftInstance::mark_committed() {
  if (phase_ == PbftPhase::prepared) phase_ = PbftPhase::committed;
}

Replica::Replica(std::string agent_id, std::string memory_id, std::uint64_t epoch, int f,
                 Vote honest_vote, RoundBehavior behavior, std::vector<std::string> peers,
                 std::string coordinator)
    : agent_id_(std::move(agent_id)),
      instance_(std::move(memory_id), epoch, f),
      honest_vote_(honest_vote),
      behavior_(behavior),
      peers_(std::move(peers)),
      coordinator_(std::move(coordinator)) {}

Vote Replica::sent_vote() const {
  return behavior_ == RoundBehavior::equivocate ? invert(honest_vote_) : honest_vote_;
}

void Replica::broadcast(std::vector<Envelope>& out, MessageKind kind,
                        bool include_coordinator) const {
  PbftMessage msg{kind, instance_.epoch(), instance_.memory_id(), agent_id_, sent_vote()};
  for (const auto& peer : peers_) out.push_back({peer, msg});
  if (include_coordinator) out.push_back({coordinator_, msg});
}

void Replica::maybe_commit(std::vector<Envelope>& out) {
  if (commit_sent_ || !evaluated_ || !instance_.prepared()) return;
  commit_sent_ = true;
  instance_.mark_committed();
  broadcast(out, MessageKind::commit, true);
}

std::vector<Envelope> Replica::on_message(const PbftMessage& msg) {
  std::vector<Envelope> out;
  if (behavior_ == RoundBehavior::silent) {
    // Still tracks state so its local view stays inspectable; never speaks.
    if (msg.kind == MessageKind::prepare) instance_.on_prepare(msg);
    if (msg.kind == MessageKind::commit) instance_.on_commit(msg);
    return out;
  }
  switch (msg.kind) {
    case MessageKind::evaluate:
      if (msg.epoch != instance_.epoch()) {
        throw Error(ErrorCode::StaleEpoch, "EVALUATE for another epoch");
      }
      if (evaluated_) break;
      evaluated_ = true;
      broadcast(out, MessageKind::prepare, false);
      maybe_commit(out);
      break;
    case MessageKind::prepare:
      instance_.on_prepare(msg);
      maybe_commit(out);
      break;
    case MessageKind::commit:
      instance_.on_commit(msg);
      break;
    default:
      break;
  }
  return out;
}

PbftCoordinator::PbftCoordinator(std::string name, int f) : name_(std::move(name)), f_(f) {}

InstanceStart PbftCoordinator::start_instance(const std::string& memory_id, std::uint64_t epoch,
                                              std::span<const std::string> active_agents) {
  auto key = std::make_pair(memory_id, epoch);
  if (live_.count(key)) {
    throw Error(ErrorCode::DuplicateInstance,
                fmt::format("instance for '{}' in epoch {} already live", memory_id, epoch));
  }
  live_.emplace(key, PbftInstance(memory_id, epoch, f_));

  InstanceStart start;
  const PbftMessage evaluate{MessageKind::evaluate, epoch, memory_id, name_, std::nullopt};
  for (const auto& agent : active_agents) start.evaluate.push_back({agent, evaluate});
  start.undecidable = active_agents.size() < 2 * static_cast<std::size_t>(f_) + 1;
  return start;
}

std::optional<Vote> PbftCoordinator::on_commit(const PbftMessage& msg) {
  auto it = live_.find(std::make_pair(msg.memory_id, msg.epoch));
  if (it == live_.end()) {
    throw Error(ErrorCode::StaleEpoch,
                fmt::format("no live instance for '{}' in epoch {}", msg.memory_id, msg.epoch));
  }
  return it->second.on_commit(msg);
}

const PbftInstance* PbftCoordinator::find(const std::string& memory_id,
                                          std::uint64_t epoch) const {
  auto it = live_.find(std::make_pair(memory_id, epoch));
  return it == live_.end() ? nullptr : &it->second;
}

void PbftCoordinator::close_instance(const std::string& memory_id, std::uint64_t epoch) {
  live_.erase(std::make_pair(memory_id, epoch));
}

PbftRoundResult run_pbft_round(SimNetwork& net, PbftCoordinator& coordinator,
                               std::span<const RoundParticipant> participants,
                               const std::string& memory_id, std::uint64_t epoch, int f,
                               std::size_t delivery_budget) {
  PbftRoundResult result;
  result.started_ms = net.now_ms();

  std::vector<std::string> names;
  names.reserve(participants.size());
  for (const auto& p : participants) names.push_back(p.agent_id);

  std::map<std::string, Replica> replicas;
  for (const auto& p : participants) {
    replicas.emplace(p.agent_id, Replica(p.agent_id, memory_id, epoch, f, p.honest_vote,
                                         p.behavior, names, coordinator.name()));
    result.behaviors[p.agent_id] = p.behavior;
  }

  const auto start = coordinator.start_instance(memory_id, epoch, names);
  result.undecidable = start.undecidable;
  for (const auto& env : start.evaluate) net.submit(env.msg, coordinator.name(), env.to);

  while (result.deliveries < delivery_budget) {
    auto d = net.poll();
    if (!d) break;
    ++result.deliveries;
    result.finished_ms = d->at_ms;
    try {
      if (d->to == coordinator.name()) {
        if (d->msg.kind == MessageKind::commit) {
          if (auto v = coordinator.on_commit(d->msg)) result.decision = v;
        }
        continue;
      }
      auto it = replicas.find(d->to);
      if (it == replicas.end()) continue;
      for (const auto& env : it->second.on_message(d->msg)) {
        net.submit(env.msg, it->first, env.to);
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::StaleEpoch) throw;
      ++result.stale;
    }
  }
  net.clear_pending();
  if (result.finished_ms < result.started_ms) result.finished_ms = result.started_ms;

  if (const auto* inst = coordinator.find(memory_id, epoch)) {
    result.decision = inst->decision();
    result.commit_tally_forget = inst->commit_count(Vote::forget);
    result.commit_tally_keep = inst->commit_count(Vote::keep);
  }
  coordinator.close_instance(memory_id, epoch);
  for (const auto& [id, r] : replicas) result.replica_decisions[id] = r.decision();
  result.timed_out = !result.decision.has_value();
  return result;
}

Vote finalize(const PbftInstance& instance, std::span<const AgentVote> votes,
              std::span<const AgentProfile> agents, const ProtocolConfig& cfg) {
  const auto decision = instance.decision();
  if (!decision) {
    throw Error(ErrorCode::ConsensusTimeout,
                fmt::format("no decision for '{}' in epoch {}", instance.memory_id(),
                            instance.epoch()));
  }
  if (*decision == Vote::keep) return Vote::keep;
  return decide(weighted_forget_score(votes, agents), quorum_threshold(agents, cfg.alpha));
}

}  // namespace coforget
