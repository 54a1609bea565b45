#include <doctest.h>

#include <algorithm>
#include <array>

#include "coforget/consensus.hpp"
#include "coforget/transport.hpp"
#include "helpers.hpp"

using namespace coforget;

namespace {

PbftMessage msg(MessageKind kind, const std::string& sender, Vote v, std::uint64_t epoch = 0,
                const std::string& memory = "m") {
  return PbftMessage{kind, epoch, memory, sender, v};
}

SimNetwork make_net(std::uint64_t seed, double drop = 0.0) {
  SimNetwork net(NetworkConfig{1.0, 5.0, drop, seed});
  for (const char* n : {"a", "b", "c", "d", "coordinator"}) net.add_node(n);
  return net;
}

std::vector<RoundParticipant> unanimous(Vote v) {
  return {{"a", v, RoundBehavior::honest},
          {"b", v, RoundBehavior::honest},
          {"c", v, RoundBehavior::honest},
          {"d", v, RoundBehavior::honest}};
}

}  // namespace

TEST_CASE("instance thresholds follow 2f and 2f+1") {
  PbftInstance inst("m", 0, 1);
  CHECK(inst.prepare_threshold() == 2);
  CHECK(inst.commit_threshold() == 3);
  CHECK_FALSE(inst.on_prepare(msg(MessageKind::prepare, "a", Vote::forget)));
  CHECK_FALSE(inst.on_prepare(msg(MessageKind::prepare, "a", Vote::forget)));  // duplicate
  CHECK(inst.on_prepare(msg(MessageKind::prepare, "b", Vote::forget)));
  CHECK(inst.phase() == PbftPhase::prepared);
  CHECK_FALSE(inst.on_prepare(msg(MessageKind::prepare, "c", Vote::forget)));  // only once
  CHECK_FALSE(inst.on_commit(msg(MessageKind::commit, "a", Vote::forget)));
  CHECK_FALSE(inst.on_commit(msg(MessageKind::commit, "b", Vote::forget)));
  CHECK_FALSE(inst.on_commit(msg(MessageKind::commit, "b", Vote::forget)));
  CHECK(inst.on_commit(msg(MessageKind::commit, "c", Vote::forget)) == Vote::forget);
  CHECK(inst.phase() == PbftPhase::decided);
  CHECK_FALSE(inst.on_commit(msg(MessageKind::commit, "d", Vote::forget)));
  CHECK(inst.commit_count(Vote::forget) == 4);
}

TEST_CASE("f = 0 prepares on the first PREPARE and commits on the first COMMIT") {
  PbftInstance inst("m", 0, 0);
  CHECK(inst.on_prepare(msg(MessageKind::prepare, "a", Vote::keep)));
  CHECK(inst.on_commit(msg(MessageKind::commit, "a", Vote::keep)) == Vote::keep);
}

TEST_CASE("instance rejects stale epochs and misrouted messages") {
  PbftInstance inst("m", 3, 1);
  try {
    inst.on_prepare(msg(MessageKind::prepare, "a", Vote::keep, 2));
    FAIL("expected StaleEpoch");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::StaleEpoch);
  }
  CHECK_THROWS_AS(inst.on_prepare(msg(MessageKind::commit, "a", Vote::keep, 3)), Error);
  CHECK_THROWS_AS(inst.on_prepare(msg(MessageKind::prepare, "a", Vote::keep, 3, "other")), Error);
  CHECK_THROWS_AS(inst.on_commit(PbftMessage{MessageKind::commit, 3, "m", "a", std::nullopt}),
                  Error);
}

TEST_CASE("split commits never decide") {
  PbftInstance inst("m", 0, 1);
  inst.on_commit(msg(MessageKind::commit, "a", Vote::forget));
  inst.on_commit(msg(MessageKind::commit, "b", Vote::forget));
  inst.on_commit(msg(MessageKind::commit, "c", Vote::keep));
  inst.on_commit(msg(MessageKind::commit, "d", Vote::keep));
  CHECK_FALSE(inst.decision().has_value());
}

TEST_CASE("decision is independent of delivery order across all 8! orders") {
  // Four PREPAREs and four COMMITs, one of each per sender; d equivocates.
  std::array<PbftMessage, 8> msgs{
      msg(MessageKind::prepare, "a", Vote::forget), msg(MessageKind::prepare, "b", Vote::forget),
      msg(MessageKind::prepare, "c", Vote::forget), msg(MessageKind::prepare, "d", Vote::keep),
      msg(MessageKind::commit, "a", Vote::forget),  msg(MessageKind::commit, "b", Vote::forget),
      msg(MessageKind::commit, "c", Vote::forget),  msg(MessageKind::commit, "d", Vote::keep)};
  std::array<int, 8> order{0, 1, 2, 3, 4, 5, 6, 7};
  std::size_t perms = 0;
  bool all_same = true;
  do {
    PbftInstance inst("m", 0, 1);
    for (int i : order) {
      if (msgs[i].kind == MessageKind::prepare) {
        inst.on_prepare(msgs[i]);
      } else {
        inst.on_commit(msgs[i]);
      }
    }
    all_same = all_same && inst.decision() == Vote::forget && inst.prepared() &&
               inst.commit_count(Vote::forget) == 3 && inst.commit_count(Vote::keep) == 1;
    ++perms;
  } while (std::next_permutation(order.begin(), order.end()));
  CHECK(perms == 40320);
  CHECK(all_same);
}

TEST_CASE("fault-free round decides with exactly 40 deliveries") {
  auto net = make_net(1);
  PbftCoordinator coord("coordinator", 1);
  const auto parts = unanimous(Vote::forget);
  const auto r = run_pbft_round(net, coord, parts, "m", 0, 1, 40);
  CHECK(r.decision == Vote::forget);
  CHECK_FALSE(r.timed_out);
  CHECK(r.deliveries == 40);
  CHECK(r.commit_tally_forget == 4);
  for (const auto& [id, d] : r.replica_decisions) CHECK(d == Vote::forget);
  CHECK(coord.live_instances() == 0);
  CHECK(r.finished_ms >= r.started_ms);
}

TEST_CASE("one silent or equivocating agent cannot block or flip a unanimous honest round") {
  for (auto behavior : {RoundBehavior::silent, RoundBehavior::equivocate}) {
    for (auto v : {Vote::keep, Vote::forget}) {
      auto net = make_net(2);
      PbftCoordinator coord("coordinator", 1);
      auto parts = unanimous(v);
      parts[1].behavior = behavior;
      const auto r = run_pbft_round(net, coord, parts, "m", 0, 1, 40);
      CHECK(r.decision == v);
      for (const auto& [id, d] : r.replica_decisions) CHECK((!d || *d == v));
    }
  }
}

TEST_CASE("honest split plus a silent agent times out") {
  auto net = make_net(3);
  PbftCoordinator coord("coordinator", 1);
  std::vector<RoundParticipant> parts{{"a", Vote::forget, RoundBehavior::honest},
                                      {"b", Vote::forget, RoundBehavior::honest},
                                      {"c", Vote::keep, RoundBehavior::honest},
                                      {"d", Vote::keep, RoundBehavior::silent}};
  const auto r = run_pbft_round(net, coord, parts, "m", 0, 1, 40);
  CHECK(r.timed_out);
  CHECK_FALSE(r.decision.has_value());
  CHECK(coord.live_instances() == 0);
  CHECK(net.pending() == 0);
}

TEST_CASE("too few participants is flagged undecidable") {
  auto net = make_net(4);
  PbftCoordinator coord("coordinator", 1);
  std::vector<RoundParticipant> parts{{"a", Vote::forget, RoundBehavior::honest},
                                      {"b", Vote::forget, RoundBehavior::honest}};
  const auto r = run_pbft_round(net, coord, parts, "m", 0, 1, 40);
  CHECK(r.undecidable);
  CHECK(r.timed_out);
}

TEST_CASE("duplicate live instance is rejected") {
  PbftCoordinator coord("coordinator", 1);
  const std::vector<std::string> agents{"a", "b", "c", "d"};
  const auto start = coord.start_instance("m", 0, agents);
  CHECK(start.evaluate.size() == 4);
  CHECK_FALSE(start.undecidable);
  CHECK_THROWS_AS(coord.start_instance("m", 0, agents), Error);
  CHECK_NOTHROW(coord.start_instance("m", 1, agents));
  coord.close_instance("m", 0);
  CHECK_NOTHROW(coord.start_instance("m", 0, agents));
}

TEST_CASE("exhausted budget is a timeout") {
  auto net = make_net(5);
  PbftCoordinator coord("coordinator", 1);
  const auto r = run_pbft_round(net, coord, unanimous(Vote::keep), "m", 0, 1, 10);
  CHECK(r.timed_out);
  CHECK(r.deliveries == 10);
}

TEST_CASE("finalize combines consensus with the weighted quorum") {
  const auto agents = coforget::test::paper_agents();
  const ProtocolConfig cfg;
  auto decided = [](Vote v) {
    PbftInstance inst("m", 0, 1);
    for (const char* s : {"a", "b", "c"}) inst.on_commit(msg(MessageKind::commit, s, v));
    return inst;
  };
  std::vector<AgentVote> all_forget;
  for (const auto& a : agents) all_forget.push_back({a.agent_id, "m", Vote::forget, 0});
  CHECK(finalize(decided(Vote::forget), all_forget, agents, cfg) == Vote::forget);
  CHECK(finalize(decided(Vote::keep), all_forget, agents, cfg) == Vote::keep);

  std::vector<AgentVote> planners_only{{"planner-1", "m", Vote::forget, 0},
                                       {"planner-2", "m", Vote::forget, 0}};
  CHECK(finalize(decided(Vote::forget), planners_only, agents, cfg) == Vote::keep);

  PbftInstance undecided("m", 0, 1);
  try {
    finalize(undecided, all_forget, agents, cfg);
    FAIL("expected ConsensusTimeout");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::ConsensusTimeout);
  }
}

TEST_CASE("randomized rounds never disagree") {
  Rng rng(77);
  for (int run = 0; run < 300; ++run) {
    auto net = make_net(rng.next(), rng.uniform(0.0, 0.2));
    PbftCoordinator coord("coordinator", 1);
    std::vector<RoundParticipant> parts;
    int faulty = 0;
    for (const char* id : {"a", "b", "c", "d"}) {
      RoundBehavior b = RoundBehavior::honest;
      if (faulty == 0 && rng.coin(0.3)) {
        b = rng.coin() ? RoundBehavior::silent : RoundBehavior::equivocate;
        ++faulty;
      }
      parts.push_back({id, rng.coin() ? Vote::forget : Vote::keep, b});
    }
    const auto r = run_pbft_round(net, coord, parts, "m", 0, 1, 40);
    std::optional<Vote> seen = r.decision;
    for (const auto& p : parts) {
      const auto d = r.replica_decisions.at(p.agent_id);
      if (!d || p.behavior != RoundBehavior::honest) continue;
      if (seen) CHECK(*d == *seen);
      seen = d;
    }
  }
}
