#include "coforget/transport.hpp"

#include <fmt/format.h>

#include "coforget/consensus.hpp"

namespace coforget {

std::string_view to_string(MessageKind kind) {
  switch (kind) {
    case MessageKind::evaluate: return "EVALUATE";
    case MessageKind::prepare: return "PREPARE";
    case MessageKind::commit: return "COMMIT";
    case MessageKind::propose: return "PROPOSE";
    case MessageKind::propose_ack: return "PROPOSE_ACK";
  }
  return "?";
}

void validate_network(const NetworkConfig& net) {
  if (!(net.latency_min_ms >= 0.0 && net.latency_min_ms <= net.latency_max_ms)) {
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("latency bounds must satisfy 0 <= min <= max, got [{}, {}]",
                            net.latency_min_ms, net.latency_max_ms));
  }
  if (!(net.drop_prob >= 0.0 && net.drop_prob <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter,
                fmt::format("drop_prob must lie in [0,1], got {}", net.drop_prob));
  }
}

SimNetwork::SimNetwork(NetworkConfig cfg) : cfg_(cfg), rng_(cfg.seed) { validate_network(cfg_); }

void SimNetwork::add_node(const std::string& name) { nodes_.insert(name); }

bool SimNetwork::submit(const PbftMessage& msg, const std::string& from, const std::string& to) {
  if (!has_node(to)) {
    throw Error(ErrorCode::UnknownDestination, fmt::format("no node named '{}'", to));
  }
  ++submitted_;
  double at = now_ms_;
  if (from != to) {
    // Both draws happen for every remote submission so the random stream
    // does not depend on which messages were lost.
    const bool lost = rng_.uniform() < cfg_.drop_prob;
    const double latency = rng_.uniform(cfg_.latency_min_ms, cfg_.latency_max_ms);
    if (lost) {
      ++dropped_;
      return false;
    }
    at += latency;
  }
  queue_.push(Delivery{at, from, to, seq_++, msg});
  return true;
}

std::optional<Delivery> SimNetwork::poll() {
  if (queue_.empty()) return std::nullopt;
  Delivery d = queue_.top();
  queue_.pop();
  now_ms_ = std::max(now_ms_, d.at_ms);
  ++delivered_;
  return d;
}

std::size_t SimNetwork::clear_pending() {
  const std::size_t n = queue_.size();
  queue_ = {};
  return n;
}

FaultCoin::FaultCoin(FaultProfile profile) : profile_(profile), rng_(profile.coin_seed) {}

RoundBehavior FaultCoin::next_round() {
  switch (profile_.kind) {
    case FaultKind::honest:
      return RoundBehavior::honest;
    case FaultKind::silent_half:
      return rng_.coin() ? RoundBehavior::silent : RoundBehavior::honest;
    case FaultKind::equivocate_half:
      return rng_.coin() ? RoundBehavior::equivocate : RoundBehavior::honest;
    case FaultKind::silent_or_equivocate:
      return rng_.coin() ? RoundBehavior::silent : RoundBehavior::equivocate;
  }
  return RoundBehavior::honest;
}

}  // namespace coforget
