#include "coforget/report.hpp"

#include <fstream>
#include <ostream>

#include <fmt/format.h>

namespace coforget {

using nlohmann::json;

json to_json(const RunConfig& run) {
  const auto& p = run.protocol;
  json agents = json::array();
  for (const auto& a : run.agents) {
    agents.push_back({{"agent_id", a.agent_id},
                      {"weight", a.weight},
                      {"confidence", a.confidence},
                      {"active", a.active},
                      {"fault", std::string(to_string(a.fault.kind))}});
  }
  return {
      {"protocol",
       {{"n_agents", p.n_agents},
        {"f", p.f},
        {"alpha", p.alpha},
        {"decay_scales", p.decay_scales},
        {"decay_weights", p.decay_weights},
        {"decay_threshold", p.decay_threshold},
        {"variance_warn", p.variance_warn},
        {"omega_d", p.omega_d},
        {"omega_r", p.omega_r},
        {"vote_threshold", p.vote_threshold},
        {"epoch_interactions", p.epoch_interactions},
        {"cache_capacity", p.cache_capacity},
        {"batch_size", p.batch_size},
        {"batch_interval_s", p.batch_interval_s},
        {"rng_seed", p.rng_seed},
        {"dimension", p.dimension},
        {"pbft_budget_factor", p.pbft_budget_factor},
        {"silent_counts_active", p.silent_counts_active}}},
      {"agents", agents},
      {"network",
       {{"latency_min_ms", run.network.latency_min_ms},
        {"latency_max_ms", run.network.latency_max_ms},
        {"drop_prob", run.network.drop_prob},
        {"seed", run.network.seed}}},
      {"workload",
       {{"initial_items", run.workload.initial_items},
        {"arrivals_min", run.workload.arrivals_min},
        {"arrivals_max", run.workload.arrivals_max},
        {"access_skew", run.workload.access_skew},
        {"accesses_per_interaction", run.workload.accesses_per_interaction},
        {"relevance_mix", run.workload.relevance_mix},
        {"seed", run.workload.seed},
        {"seconds_per_interaction", run.workload.seconds_per_interaction},
        {"history_window_s", run.workload.history_window_s}}},
  };
}

json to_json(const SummaryMetrics& s) {
  return {{"epochs", s.epochs},
          {"initial_footprint", s.initial_footprint},
          {"final_footprint", s.final_footprint},
          {"final_baseline", s.final_baseline},
          {"footprint_reduction", s.footprint_reduction},
          {"mean_deletion_rate", s.mean_deletion_rate},
          {"pbft_success_rate", s.pbft_success_rate},
          {"strict_pbft_success", s.strict_pbft_success},
          {"cache_hit_rate", s.cache_hit_rate},
          {"cache_hits", s.cache_hits},
          {"cache_misses", s.cache_misses},
          {"total_deleted", s.total_deleted},
          {"total_instances", s.total_instances},
          {"total_timeouts", s.total_timeouts},
          {"epochs_with_instances", s.epochs_with_instances},
          {"epochs_fully_decided", s.epochs_fully_decided},
          {"total_virtual_s", s.total_virtual_s}};
}

json to_json(const EpochReport& r, std::size_t baseline_footprint) {
  return {{"epoch_index", r.epoch_index},
          {"memories_start", r.memories_start},
          {"additions", r.additions},
          {"memories_end", r.memories_end},
          {"baseline_footprint", baseline_footprint},
          {"proposed", r.proposed},
          {"consensus_reached", r.consensus_reached},
          {"consensus_failed", r.consensus_failed},
          {"deleted", r.deleted},
          {"deletion_rate", r.deletion_rate},
          {"elapsed_virtual_s", r.elapsed_virtual_s},
          {"cache_hits", r.cache_hits},
          {"cache_misses", r.cache_misses},
          {"decay_proposals", r.decay_proposals},
          {"high_variance", r.high_variance}};
}

json to_json(const AuditEntry& a) {
  json votes = json::array();
  for (const auto& v : a.votes) {
    votes.push_back({{"agent_id", v.agent_id},
                     {"vote", std::string(to_string(v.vote))},
                     {"combined_score", v.combined_score}});
  }
  return {{"epoch", a.epoch},
          {"memory_id", a.memory_id},
          {"decay", a.decay},
          {"votes", votes},
          {"consensus", std::string(to_string(a.consensus))},
          {"commit_forget", a.commit_forget},
          {"commit_keep", a.commit_keep},
          {"silent_agents", a.silent_agents},
          {"equivocating_agents", a.equivocating_agents},
          {"s_m", a.s_m},
          {"q", a.q},
          {"decision", std::string(to_string(a.decision))},
          {"deleted", a.deleted}};
}

json report_document(const RunConfig& run, std::string_view scenario, const RunResult& result) {
  json epochs = json::array();
  for (std::size_t i = 0; i < result.reports.size(); ++i) {
    epochs.push_back(to_json(result.reports[i], result.baseline_footprints.at(i)));
  }
  const auto& st = result.store_stats;
  return {{"scenario", std::string(scenario)},
          {"config", to_json(run)},
          {"summary", to_json(result.summary)},
          {"store",
           {{"hits", st.hits},
            {"misses", st.misses},
            {"puts", st.puts},
            {"buffered_writes", st.buffered_writes},
            {"upsert_calls", st.upsert_calls},
            {"size_flushes", st.size_flushes},
            {"time_flushes", st.time_flushes},
            {"forced_flushes", st.forced_flushes},
            {"flushed_records", st.flushed_records},
            {"deleted", st.deleted}}},
          {"epochs", epochs}};
}

void write_epochs_csv(std::ostream& out, const RunResult& result) {
  out << "epoch_index,memories_start,additions,memories_end,baseline_footprint,proposed,"
         "consensus_reached,consensus_failed,deleted,deletion_rate,elapsed_virtual_s,"
         "cache_hits,cache_misses,decay_proposals,high_variance\n";
  for (std::size_t i = 0; i < result.reports.size(); ++i) {
    const auto& r = result.reports[i];
    out << fmt::format("{},{},{},{},{},{},{},{},{},{:.9f},{:.6f},{},{},{},{}\n", r.epoch_index,
                       r.memories_start, r.additions, r.memories_end,
                       result.baseline_footprints.at(i), r.proposed, r.consensus_reached,
                       r.consensus_failed, r.deleted, r.deletion_rate, r.elapsed_virtual_s,
                       r.cache_hits, r.cache_misses, r.decay_proposals, r.high_variance);
  }
}

void write_audit_jsonl(std::ostream& out, const RunResult& result) {
  for (const auto& r : result.reports) {
    for (const auto& a : r.per_memory_audit) out << to_json(a).dump() << '\n';
  }
}

namespace {

template <typename Fn>
void write_file(const std::filesystem::path& path, Fn&& body) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, fmt::format("cannot open '{}' for writing", path.string()));
  body(out);
  out.flush();
  if (!out) throw Error(ErrorCode::Io, fmt::format("write to '{}' failed", path.string()));
}

}  // namespace

void write_outputs(const std::filesystem::path& dir, const RunConfig& run,
                   std::string_view scenario, const RunResult& result) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw Error(ErrorCode::Io, fmt::format("cannot create output directory '{}': {}", dir.string(),
                                           ec ? ec.message() : "not a directory"));
  }
  write_file(dir / "report.json",
             [&](std::ostream& out) { out << report_document(run, scenario, result).dump(2) << '\n'; });
  write_file(dir / "epochs.csv", [&](std::ostream& out) { write_epochs_csv(out, result); });
  write_file(dir / "audit.jsonl", [&](std::ostream& out) { write_audit_jsonl(out, result); });
}

}  // namespace coforget
