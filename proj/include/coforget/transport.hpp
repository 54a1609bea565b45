#pragma once

#include <cstdint>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "coforget/message.hpp"
#include "coforget/rng.hpp"

namespace coforget {

enum class RoundBehavior;

struct NetworkConfig {
  double latency_min_ms = 1.0;
  double latency_max_ms = 5.0;
  double drop_prob = 0.0;
  std::uint64_t seed = 1;
};

/// Throws InvalidParameter unless 0 <= min <= max and drop_prob in [0,1].
void validate_network(const NetworkConfig& net);

struct Delivery {
  double at_ms = 0.0;
  std::string from;
  std::string to;
  std::uint64_t seq = 0;
  PbftMessage msg;
};

/// Single-owner discrete-event network. Messages are delivered in timestamp
/// order; equal timestamps go by (sender, submission sequence). Self-addressed
/// messages skip latency and loss. The full trace is a pure function of the
/// submission sequence and the seed.
class SimNetwork {
 public:
  explicit SimNetwork(NetworkConfig cfg);

  void add_node(const std::string& name);
  bool has_node(const std::string& name) const { return nodes_.count(name) != 0; }

  /// False when the message was dropped. Throws UnknownDestination.
  bool submit(const PbftMessage& msg, const std::string& from, const std::string& to);

  /// Next delivery, advancing the clock to its timestamp.
  std::optional<Delivery> poll();

  /// Discards everything in flight; returns how many were discarded.
  std::size_t clear_pending();

  double now_ms() const { return now_ms_; }
  std::size_t pending() const { return queue_.size(); }
  std::uint64_t submitted() const { return submitted_; }
  std::uint64_t dropped() const { return dropped_; }
  std::uint64_t delivered() const { return delivered_; }
  const NetworkConfig& config() const { return cfg_; }

 private:
  struct Later {
    bool operator()(const Delivery& a, const Delivery& b) const {
      return std::tie(a.at_ms, a.from, a.seq) > std::tie(b.at_ms, b.from, b.seq);
    }
  };

  NetworkConfig cfg_;
  Rng rng_;
  std::set<std::string, std::less<>> nodes_;
  std::priority_queue<Delivery, std::vector<Delivery>, Later> queue_;
  double now_ms_ = 0.0;
  std::uint64_t seq_ = 0;
  std::uint64_t submitted_ = 0;
  std::uint64_t dropped_ = 0;
  std::uint64_t delivered_ = 0;
};

/// Per-agent seeded coin deciding each round's behaviour from its profile.
class FaultCoin {
 public:
  explicit FaultCoin(FaultProfile profile);

  RoundBehavior next_round();

  const FaultProfile& profile() const { return profile_; }

 private:
  FaultProfile profile_;
  Rng rng_;
};

}  // namespace coforget
