#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coforget/core.hpp"
#include "coforget/relevance.hpp"
#include "coforget/rng.hpp"

namespace coforget {

struct EpochReport;

struct WorkloadSpec {
  std::size_t initial_items = 1000;
  int arrivals_min = 10;
  int arrivals_max = 20;
  double access_skew = 1.0;  // Zipf exponent over live ids, rank = insertion order
  int accesses_per_interaction = 1;
  double relevance_mix = 0.5;  // share of items with cosine >= 0.5 to the context
  std::uint64_t seed = 1;
  double seconds_per_interaction = 1.0;
  double history_window_s = 7200.0;  // initial t_last spread before start
};

std::vector<ConfigViolation> check_workload(const WorkloadSpec& spec);

/// Consumes `workload.*` keys from kv.
void apply_workload_keys(WorkloadSpec& spec, KeyValueMap& kv);

/// Cosine value that separates near-context from far items.
inline constexpr double kNearCosine = 0.5;

/// Random unit-norm context vector.
ContextProfile make_context(std::size_t dimension, Rng& rng, std::string label = "task");

/// A vector whose cosine with `direction` is `target_cos`, with a random
/// orthogonal component and a random positive norm.
Embedding embedding_with_cosine(const Embedding& direction, double target_cos, Rng& rng);

/// Zipf(s) over ranks 0..n-1, where rank 0 is the most popular.
class ZipfSampler {
 public:
  ZipfSampler(std::size_t n, double exponent);

  std::size_t sample(Rng& rng) const;
  double mass(std::size_t rank) const;
  std::size_t size() const { return cdf_.size(); }
  double exponent() const { return exponent_; }

 private:
  double exponent_;
  std::vector<double> cdf_;
};

/// Access targets for one interaction: accesses_per_interaction ids drawn by
/// Zipf rank over `live_ids` in insertion order. Throws EmptyPopulation.
std::vector<std::string> step_interaction(const WorkloadSpec& spec,
                                          std::span<const std::string> live_ids, Rng& rng);

struct Interaction {
  std::vector<std::string> accesses;
  std::vector<MemoryRecord> arrivals;
};

/// Seeded source of initial memories, per-interaction accesses and arrivals.
/// Content, access and arrival draws use separate streams so changing one
/// knob does not reshuffle the others.
class WorkloadGenerator {
 public:
  WorkloadGenerator(WorkloadSpec spec, std::size_t dimension, ContextProfile context,
                    std::vector<std::string> creators);

  /// Exactly initial_items records with t_last spread over
  /// [0, history_window_s). Simulated time starts at start_time().
  std::vector<MemoryRecord> generate_initial();
  Timestamp start_time() const { return spec_.history_window_s; }

  /// Draws this epoch's arrival count and spreads it over the interactions.
  void begin_epoch(int interactions);
  int planned_arrivals() const { return static_cast<int>(arrival_steps_.size()); }

  /// Interaction `step` of the current epoch. Accesses are empty when
  /// `live_ids` is empty; arrivals are stamped with t_last = now.
  Interaction step(int step, std::span<const std::string> live_ids, Timestamp now);

  MemoryRecord make_record(Timestamp t_last);

  const WorkloadSpec& spec() const { return spec_; }
  const ContextProfile& context() const { return context_; }

 private:
  const ZipfSampler& sampler(std::size_t n);

  WorkloadSpec spec_;
  std::size_t dimension_;
  ContextProfile context_;
  Embedding direction_;
  std::vector<std::string> creators_;
  Rng content_rng_;
  Rng access_rng_;
  Rng arrival_rng_;
  std::vector<int> arrival_steps_;
  std::optional<ZipfSampler> sampler_;
};

struct SummaryMetrics {
  std::size_t epochs = 0;
  std::size_t initial_footprint = 0;
  std::size_t final_footprint = 0;
  std::size_t final_baseline = 0;
  double footprint_reduction = 0.0;
  double mean_deletion_rate = 0.0;
  double pbft_success_rate = 1.0;
  double cache_hit_rate = 0.0;
  std::size_t cache_hits = 0;
  std::size_t cache_misses = 0;
  std::size_t total_deleted = 0;
  std::size_t total_instances = 0;
  std::size_t total_timeouts = 0;
  std::size_t epochs_with_instances = 0;
  std::size_t epochs_fully_decided = 0;
  double total_virtual_s = 0.0;
  bool strict_pbft_success = false;
};

/// Run-level metrics. baseline_footprints[i] is the no-forgetting footprint
/// after epoch i. With strict = false an epoch with no instances counts as a
/// PBFT success; with strict = true such epochs are excluded.
SummaryMetrics aggregate(std::span<const EpochReport> reports,
                         std::span<const std::size_t> baseline_footprints, bool strict = false);

}  // namespace coforget
