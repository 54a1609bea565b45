#include <doctest.h>

#include <vector>

#include "coforget/consensus.hpp"
#include "coforget/transport.hpp"

using namespace coforget;

namespace {

PbftMessage prepare(const std::string& from, int i) {
  return PbftMessage{MessageKind::prepare, 0, "m" + std::to_string(i), from, Vote::keep};
}

std::vector<std::tuple<double, std::string, std::string, std::string>> trace(std::uint64_t seed,
                                                                             double drop) {
  SimNetwork net(NetworkConfig{1.0, 5.0, drop, seed});
  for (const char* n : {"a", "b", "c"}) net.add_node(n);
  for (int i = 0; i < 200; ++i) {
    net.submit(prepare(i % 2 ? "a" : "b", i), i % 2 ? "a" : "b", i % 3 ? "c" : "a");
  }
  std::vector<std::tuple<double, std::string, std::string, std::string>> out;
  while (auto d = net.poll()) out.emplace_back(d->at_ms, d->from, d->to, d->msg.memory_id);
  return out;
}

}  // namespace

TEST_CASE("network config validation") {
  CHECK_NOTHROW(validate_network(NetworkConfig{}));
  CHECK_THROWS_AS(validate_network(NetworkConfig{5.0, 1.0, 0.0, 1}), Error);
  CHECK_THROWS_AS(validate_network(NetworkConfig{-1.0, 1.0, 0.0, 1}), Error);
  CHECK_THROWS_AS(validate_network(NetworkConfig{1.0, 2.0, 1.5, 1}), Error);
}

TEST_CASE("delivery trace is a pure function of seed and submissions") {
  CHECK(trace(11, 0.1) == trace(11, 0.1));
  CHECK(trace(11, 0.1) != trace(12, 0.1));
}

TEST_CASE("deliveries come out in timestamp order within the latency band") {
  SimNetwork net(NetworkConfig{1.0, 5.0, 0.0, 3});
  net.add_node("a");
  net.add_node("b");
  for (int i = 0; i < 500; ++i) net.submit(prepare("a", i), "a", "b");
  double last = 0.0;
  std::size_t n = 0;
  while (auto d = net.poll()) {
    CHECK(d->at_ms >= last);
    CHECK(d->at_ms >= 1.0);
    CHECK(d->at_ms <= 5.0);
    last = d->at_ms;
    ++n;
  }
  CHECK(n == 500);
  CHECK(net.delivered() == 500);
}

TEST_CASE("equal timestamps deliver in submission order per sender") {
  SimNetwork net(NetworkConfig{2.0, 2.0, 0.0, 1});
  net.add_node("a");
  net.add_node("b");
  for (int i = 0; i < 50; ++i) net.submit(prepare("a", i), "a", "b");
  int expect = 0;
  while (auto d = net.poll()) CHECK(d->msg.memory_id == "m" + std::to_string(expect++));
}

TEST_CASE("self messages skip latency and loss") {
  SimNetwork net(NetworkConfig{1.0, 5.0, 1.0, 1});
  net.add_node("a");
  net.add_node("b");
  CHECK(net.submit(prepare("a", 0), "a", "a"));
  CHECK_FALSE(net.submit(prepare("a", 1), "a", "b"));
  CHECK(net.dropped() == 1);
  const auto d = net.poll();
  REQUIRE(d.has_value());
  CHECK(d->at_ms == 0.0);
  CHECK_FALSE(net.poll().has_value());
}

TEST_CASE("unknown destination") {
  SimNetwork net(NetworkConfig{});
  net.add_node("a");
  try {
    net.submit(prepare("a", 0), "a", "nobody");
    FAIL("expected UnknownDestination");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::UnknownDestination);
  }
}

TEST_CASE("clear_pending discards in-flight messages") {
  SimNetwork net(NetworkConfig{});
  net.add_node("a");
  net.add_node("b");
  for (int i = 0; i < 5; ++i) net.submit(prepare("a", i), "a", "b");
  CHECK(net.clear_pending() == 5);
  CHECK(net.pending() == 0);
}

TEST_CASE("fault coins") {
  const int rounds = 20000;
  SUBCASE("honest is always honest") {
    FaultCoin coin(FaultProfile{FaultKind::honest, 1});
    for (int i = 0; i < 100; ++i) CHECK(coin.next_round() == RoundBehavior::honest);
  }
  SUBCASE("silent_half is silent about half the time") {
    FaultCoin coin(FaultProfile{FaultKind::silent_half, 5});
    int silent = 0;
    for (int i = 0; i < rounds; ++i) {
      const auto b = coin.next_round();
      CHECK(b != RoundBehavior::equivocate);
      silent += b == RoundBehavior::silent;
    }
    CHECK(std::abs(silent / double(rounds) - 0.5) <= 0.02);
  }
  SUBCASE("equivocate_half") {
    FaultCoin coin(FaultProfile{FaultKind::equivocate_half, 6});
    int eq = 0;
    for (int i = 0; i < rounds; ++i) eq += coin.next_round() == RoundBehavior::equivocate;
    CHECK(std::abs(eq / double(rounds) - 0.5) <= 0.02);
  }
  SUBCASE("silent_or_equivocate is faulty every round") {
    FaultCoin coin(FaultProfile{FaultKind::silent_or_equivocate, 7});
    int silent = 0;
    for (int i = 0; i < rounds; ++i) {
      const auto b = coin.next_round();
      CHECK(b != RoundBehavior::honest);
      silent += b == RoundBehavior::silent;
    }
    CHECK(std::abs(silent / double(rounds) - 0.5) <= 0.02);
  }
  SUBCASE("same seed, same schedule") {
    FaultCoin a(FaultProfile{FaultKind::silent_half, 9});
    FaultCoin b(FaultProfile{FaultKind::silent_half, 9});
    for (int i = 0; i < 1000; ++i) CHECK(a.next_round() == b.next_round());
  }
}
