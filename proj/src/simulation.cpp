#include "coforget/simulation.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "coforget/log.hpp"
#include "coforget/rng.hpp"

namespace coforget {

std::vector<AgentProfile> default_roster() {
  return {
      AgentProfile{"planner-1", 1.5, 1.0, true, {}},
      AgentProfile{"planner-2", 1.5, 1.0, true, {}},
      AgentProfile{"perception-1", 1.0, 1.0, true, {}},
      AgentProfile{"perception-2", 1.0, 1.0, true, {}},
  };
}

std::vector<AgentProfile> roster_for(int n_agents) {
  if (n_agents == 4) return default_roster();
  std::vector<AgentProfile> out;
  for (int i = 1; i <= n_agents; ++i) {
    out.push_back(AgentProfile{fmt::format("agent-{}", i), 1.0, 1.0, true, {}});
  }
  return out;
}

std::string_view to_string(Scenario s) {
  switch (s) {
    case Scenario::baseline_no_faults: return "baseline_no_faults";
    case Scenario::byzantine_f1: return "byzantine_f1";
    case Scenario::cache_profile: return "cache_profile";
    case Scenario::custom: return "custom";
  }
  return "?";
}

std::optional<Scenario> parse_scenario(std::string_view text) {
  for (auto s : {Scenario::baseline_no_faults, Scenario::byzantine_f1, Scenario::cache_profile,
                 Scenario::custom}) {
    if (text == to_string(s)) return s;
  }
  return std::nullopt;
}

RunConfig scenario_config(Scenario s) {
  RunConfig run;
  run.agents = default_roster();
  if (s != Scenario::custom) run.workload.access_skew = kPresetAccessSkew;
  if (s == Scenario::byzantine_f1) {
    for (auto& a : run.agents) {
      if (a.agent_id == "planner-2") a.fault.kind = FaultKind::silent_or_equivocate;
    }
  }
  if (s == Scenario::cache_profile) run.workload.accesses_per_interaction = 5;
  apply_seed(run, run.protocol.rng_seed);
  return run;
}

std::vector<ConfigViolation> check_run_config(const RunConfig& run) {
  auto out = check_config(run.protocol);
  for (auto& v : check_workload(run.workload)) out.push_back(std::move(v));
  try {
    validate_network(run.network);
  } catch (const Error& e) {
    out.push_back({e.code(), e.what()});
  }
  if (run.agents.size() != static_cast<std::size_t>(std::max(0, run.protocol.n_agents))) {
    out.push_back({ErrorCode::LengthMismatch,
                   fmt::format("roster has {} agents but n_agents = {}", run.agents.size(),
                               run.protocol.n_agents)});
  }
  std::set<std::string> seen;
  for (const auto& a : run.agents) {
    if (a.agent_id.empty() || a.agent_id == ForgettingCoordinator::kCoordinatorName) {
      out.push_back({ErrorCode::InvalidParameter, fmt::format("invalid agent id '{}'", a.agent_id)});
    } else if (!seen.insert(a.agent_id).second) {
      out.push_back({ErrorCode::InvalidParameter, fmt::format("duplicate agent id '{}'", a.agent_id)});
    }
    if (!(a.weight > 0.0)) {
      out.push_back({ErrorCode::InvalidParameter,
                     fmt::format("agent '{}' weight must be positive", a.agent_id)});
    }
    if (!(a.confidence >= 0.0 && a.confidence <= 1.0)) {
      out.push_back({ErrorCode::InvalidParameter,
                     fmt::format("agent '{}' confidence must lie in [0, 1]", a.agent_id)});
    }
  }
  if (std::none_of(run.agents.begin(), run.agents.end(),
                   [](const AgentProfile& a) { return a.active; })) {
    out.push_back({ErrorCode::NoActiveAgents, "no active agents in the roster"});
  }
  return out;
}

namespace {

std::optional<std::string> take(KeyValueMap& kv, std::string_view key) {
  auto it = kv.find(key);
  if (it == kv.end()) return std::nullopt;
  std::string v = it->second;
  kv.erase(it);
  return v;
}

void check_roster_length(std::string_view key, std::size_t got, std::size_t want) {
  if (got != want) {
    throw Error(ErrorCode::LengthMismatch,
                fmt::format("{} lists {} values for {} agents", key, got, want));
  }
}

}  // namespace

RunConfig apply_config_text(RunConfig base, std::string_view text) {
  auto kv = parse_key_values(text);
  RunConfig run = std::move(base);
  const int n_before = run.protocol.n_agents;
  apply_protocol_keys(run.protocol, kv);
  apply_workload_keys(run.workload, kv);

  if (auto v = take(kv, "network.latency_min_ms")) {
    run.network.latency_min_ms = parse_real("network.latency_min_ms", *v);
  }
  if (auto v = take(kv, "network.latency_max_ms")) {
    run.network.latency_max_ms = parse_real("network.latency_max_ms", *v);
  }
  if (auto v = take(kv, "network.drop_prob")) {
    run.network.drop_prob = parse_real("network.drop_prob", *v);
  }
  if (auto v = take(kv, "network.seed")) {
    run.network.seed = static_cast<std::uint64_t>(parse_integer("network.seed", *v));
  }

  if (auto v = take(kv, "agent_ids")) {
    run.agents.clear();
    for (auto& id : parse_string_list(*v)) run.agents.push_back(AgentProfile{id, 1.0, 1.0, true, {}});
  } else if (run.protocol.n_agents != n_before && run.protocol.n_agents >= 0) {
    run.agents = roster_for(run.protocol.n_agents);
  }
  if (auto v = take(kv, "agent_weights")) {
    const auto w = parse_real_list("agent_weights", *v);
    check_roster_length("agent_weights", w.size(), run.agents.size());
    for (std::size_t i = 0; i < w.size(); ++i) run.agents[i].weight = w[i];
  }
  if (auto v = take(kv, "agent_confidences")) {
    const auto c = parse_real_list("agent_confidences", *v);
    check_roster_length("agent_confidences", c.size(), run.agents.size());
    for (std::size_t i = 0; i < c.size(); ++i) run.agents[i].confidence = c[i];
  }
  if (auto v = take(kv, "agent_faults")) {
    const auto kinds = parse_string_list(*v);
    check_roster_length("agent_faults", kinds.size(), run.agents.size());
    for (std::size_t i = 0; i < kinds.size(); ++i) {
      const auto kind = parse_fault_kind(kinds[i]);
      if (!kind) {
        throw Error(ErrorCode::ConfigSyntax, fmt::format("agent_faults: unknown fault kind '{}'",
                                                         kinds[i]));
      }
      run.agents[i].fault.kind = *kind;
    }
  }
  if (auto v = take(kv, "agent_active")) {
    const auto flags = parse_string_list(*v);
    check_roster_length("agent_active", flags.size(), run.agents.size());
    for (std::size_t i = 0; i < flags.size(); ++i) {
      run.agents[i].active = parse_bool("agent_active", flags[i]);
    }
  }

  if (!kv.empty()) {
    std::string names;
    for (const auto& [k, _] : kv) names += (names.empty() ? "" : ", ") + k;
    throw Error(ErrorCode::ConfigSyntax, fmt::format("unknown config keys: {}", names));
  }
  return run;
}

RunConfig apply_config_file(RunConfig base, const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::ConfigSyntax, fmt::format("cannot read config file '{}'", path.string()));
  }
  std::ostringstream text;
  text << in.rdbuf();
  try {
    return apply_config_text(std::move(base), text.str());
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("{}: {}", path.string(), e.what()));
  }
}

void apply_seed(RunConfig& run, std::uint64_t seed) {
  run.protocol.rng_seed = seed;
  run.workload.seed = seed;
  run.network.seed = derive_seed(seed, 0x6e6574);
  for (std::size_t i = 0; i < run.agents.size(); ++i) {
    run.agents[i].fault.coin_seed = derive_seed(seed, 0x636f696e00 + i);
  }
}

RunResult run_simulation(const RunConfig& run, std::size_t epochs, bool strict_pbft_success) {
  if (epochs == 0) throw Error(ErrorCode::InvalidParameter, "epochs must be at least 1");
  if (const auto bad = check_run_config(run); !bad.empty()) {
    throw Error(bad.front().code, bad.front().message);
  }
  const auto& cfg = run.protocol;

  Rng context_rng(derive_seed(cfg.rng_seed, 0x637478));
  const auto context = make_context(cfg.dimension, context_rng);

  std::vector<Agent> agents;
  std::vector<std::string> creators;
  for (const auto& p : run.agents) {
    agents.push_back(Agent{p, default_scorer(), std::nullopt});
    creators.push_back(p.agent_id);
  }
  ForgettingCoordinator coordinator(cfg, std::move(agents), run.network);
  WorkloadGenerator workload(run.workload, cfg.dimension, context, creators);

  Timestamp now = workload.start_time();
  MemoryStore store(store_options(cfg), now);

  // Live ids in insertion order; this is the Zipf popularity ranking.
  std::vector<std::string> live;
  for (auto& r : workload.generate_initial()) {
    live.push_back(r.id);
    store.put(std::move(r), now);
  }
  store.flush(now);

  RunResult result;
  std::size_t baseline = live.size();

  for (std::size_t e = 0; e < epochs; ++e) {
    const auto hits_before = store.stats().hits;
    const auto misses_before = store.stats().misses;

    workload.begin_epoch(cfg.epoch_interactions);
    std::vector<MemoryRecord> arrivals;
    for (int step = 0; step < cfg.epoch_interactions; ++step) {
      now += run.workload.seconds_per_interaction;
      auto interaction = workload.step(step, live, now);
      for (const auto& id : interaction.accesses) store.get(id, now);
      for (auto& r : interaction.arrivals) arrivals.push_back(std::move(r));
    }

    auto report = coordinator.run_epoch(store, context, now, e);

    if (report.deleted > 0) {
      std::unordered_set<std::string> gone;
      for (const auto& a : report.per_memory_audit) {
        if (a.deleted) gone.insert(a.memory_id);
      }
      std::erase_if(live, [&](const std::string& id) { return gone.count(id) != 0; });
    }
    for (auto& r : arrivals) {
      live.push_back(r.id);
      store.put(std::move(r), now);
    }
    report.additions = arrivals.size();
    report.memories_end += report.additions;
    report.cache_hits = store.stats().hits - hits_before;
    report.cache_misses = store.stats().misses - misses_before;

    baseline += report.additions;
    result.baseline_footprints.push_back(baseline);
    logger().debug("epoch {}: start {} deleted {} end {} baseline {}", e, report.memories_start,
                   report.deleted, report.memories_end, baseline);
    result.reports.push_back(std::move(report));
  }
  store.flush(now);

  result.summary = aggregate(result.reports, result.baseline_footprints, strict_pbft_success);
  result.store_stats = store.stats();
  return result;
}

}  // namespace coforget
