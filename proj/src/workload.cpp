#include "coforget/workload.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "coforget/epoch.hpp"

namespace coforget {

namespace {

double norm(const Embedding& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

Embedding random_unit(std::size_t dim, Rng& rng) {
  Embedding v(dim);
  double n = 0.0;
  while (n == 0.0) {
    for (auto& x : v) x = rng.normal();
    n = norm(v);
  }
  for (auto& x : v) x /= n;
  return v;
}

std::int64_t non_negative(std::string_view key, std::string_view text) {
  const auto v = parse_integer(key, text);
  if (v < 0) throw Error(ErrorCode::ConfigSyntax, fmt::format("{} must be non-negative", key));
  return v;
}

}  // namespace

std::vector<ConfigViolation> check_workload(const WorkloadSpec& spec) {
  std::vector<ConfigViolation> out;
  auto fail = [&](std::string msg) { out.push_back({ErrorCode::InvalidParameter, std::move(msg)}); };
  if (spec.arrivals_min < 0 || spec.arrivals_min > spec.arrivals_max) {
    fail(fmt::format("workload arrival range [{}, {}] is empty or negative", spec.arrivals_min,
                     spec.arrivals_max));
  }
  if (!(spec.access_skew > 0.0)) fail("workload.access_skew must be positive");
  if (spec.accesses_per_interaction < 0) fail("workload.accesses_per_interaction must be >= 0");
  if (!(spec.relevance_mix >= 0.0 && spec.relevance_mix <= 1.0)) {
    fail("workload.relevance_mix must lie in [0, 1]");
  }
  if (!(spec.seconds_per_interaction > 0.0)) fail("workload.seconds_per_interaction must be positive");
  if (!(spec.history_window_s > 0.0)) fail("workload.history_window_s must be positive");
  return out;
}

void apply_workload_keys(WorkloadSpec& spec, KeyValueMap& kv) {
  auto take = [&](std::string_view key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };
  if (auto v = take("workload.initial_items")) {
    spec.initial_items = static_cast<std::size_t>(non_negative("workload.initial_items", *v));
  }
  if (auto v = take("workload.arrivals_per_epoch")) {
    // "lo..hi" or a single count
    const auto dots = v->find("..");
    if (dots == std::string::npos) {
      spec.arrivals_min = spec.arrivals_max =
          static_cast<int>(non_negative("workload.arrivals_per_epoch", *v));
    } else {
      spec.arrivals_min =
          static_cast<int>(non_negative("workload.arrivals_per_epoch", v->substr(0, dots)));
      spec.arrivals_max =
          static_cast<int>(non_negative("workload.arrivals_per_epoch", v->substr(dots + 2)));
    }
  }
  if (auto v = take("workload.arrivals_min")) {
    spec.arrivals_min = static_cast<int>(parse_integer("workload.arrivals_min", *v));
  }
  if (auto v = take("workload.arrivals_max")) {
    spec.arrivals_max = static_cast<int>(parse_integer("workload.arrivals_max", *v));
  }
  if (auto v = take("workload.access_skew")) spec.access_skew = parse_real("workload.access_skew", *v);
  if (auto v = take("workload.accesses_per_interaction")) {
    spec.accesses_per_interaction =
        static_cast<int>(parse_integer("workload.accesses_per_interaction", *v));
  }
  if (auto v = take("workload.relevance_mix")) {
    spec.relevance_mix = parse_real("workload.relevance_mix", *v);
  }
  if (auto v = take("workload.seed")) {
    spec.seed = static_cast<std::uint64_t>(non_negative("workload.seed", *v));
  }
  if (auto v = take("workload.seconds_per_interaction")) {
    spec.seconds_per_interaction = parse_real("workload.seconds_per_interaction", *v);
  }
  if (auto v = take("workload.history_window_s")) {
    spec.history_window_s = parse_real("workload.history_window_s", *v);
  }
}

ContextProfile make_context(std::size_t dimension, Rng& rng, std::string label) {
  if (dimension == 0) throw Error(ErrorCode::InvalidParameter, "context dimension must be >= 1");
  return ContextProfile{random_unit(dimension, rng), std::move(label)};
}

Embedding embedding_with_cosine(const Embedding& direction, double target_cos, Rng& rng) {
  const double dn = norm(direction);
  if (dn == 0.0) throw Error(ErrorCode::InvalidParameter, "direction must be non-zero");
  if (!(target_cos >= -1.0 && target_cos <= 1.0)) {
    throw Error(ErrorCode::InvalidParameter, fmt::format("cosine {} outside [-1, 1]", target_cos));
  }
  const std::size_t dim = direction.size();
  Embedding d(dim);
  for (std::size_t i = 0; i < dim; ++i) d[i] = direction[i] / dn;

  // Orthogonal unit component. In one dimension there is none.
  Embedding u(dim, 0.0);
  if (dim > 1) {
    double n = 0.0;
    while (n < 1e-9) {
      u = random_unit(dim, rng);
      double dot = 0.0;
      for (std::size_t i = 0; i < dim; ++i) dot += u[i] * d[i];
      for (std::size_t i = 0; i < dim; ++i) u[i] -= dot * d[i];
      n = norm(u);
    }
    for (auto& x : u) x /= n;
  }
  const double s = std::sqrt(std::max(0.0, 1.0 - target_cos * target_cos));
  const double scale = rng.uniform(0.5, 2.0);
  Embedding out(dim);
  for (std::size_t i = 0; i < dim; ++i) out[i] = scale * (target_cos * d[i] + s * u[i]);
  return out;
}

ZipfSampler::ZipfSampler(std::size_t n, double exponent) : exponent_(exponent) {
  if (n == 0) throw Error(ErrorCode::EmptyPopulation, "Zipf population is empty");
  if (!(exponent > 0.0)) throw Error(ErrorCode::InvalidParameter, "Zipf exponent must be positive");
  cdf_.resize(n);
  double acc = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    acc += std::pow(static_cast<double>(k + 1), -exponent);
    cdf_[k] = acc;
  }
  for (auto& c : cdf_) c /= acc;
  cdf_.back() = 1.0;
}

std::size_t ZipfSampler::sample(Rng& rng) const {
  const double u = rng.uniform();
  const auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  return std::min<std::size_t>(static_cast<std::size_t>(it - cdf_.begin()), cdf_.size() - 1);
}

double ZipfSampler::mass(std::size_t rank) const {
  if (rank >= cdf_.size()) return 0.0;
  return rank == 0 ? cdf_[0] : cdf_[rank] - cdf_[rank - 1];
}

std::vector<std::string> step_interaction(const WorkloadSpec& spec,
                                          std::span<const std::string> live_ids, Rng& rng) {
  if (live_ids.empty()) throw Error(ErrorCode::EmptyPopulation, "no live memories to access");
  const ZipfSampler zipf(live_ids.size(), spec.access_skew);
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(std::max(0, spec.accesses_per_interaction)));
  for (int i = 0; i < spec.accesses_per_interaction; ++i) out.push_back(live_ids[zipf.sample(rng)]);
  return out;
}

WorkloadGenerator::WorkloadGenerator(WorkloadSpec spec, std::size_t dimension,
                                     ContextProfile context, std::vector<std::string> creators)
    : spec_(std::move(spec)),
      dimension_(dimension),
      context_(std::move(context)),
      creators_(std::move(creators)),
      content_rng_(derive_seed(spec_.seed, 1)),
      access_rng_(derive_seed(spec_.seed, 2)),
      arrival_rng_(derive_seed(spec_.seed, 3)) {
  if (const auto bad = check_workload(spec_); !bad.empty()) {
    throw Error(bad.front().code, bad.front().message);
  }
  if (context_.embedding.size() != dimension_) {
    throw Error(ErrorCode::DimensionMismatch,
                fmt::format("context has dimension {}, expected {}", context_.embedding.size(),
                            dimension_));
  }
  if (norm(context_.embedding) == 0.0) {
    throw Error(ErrorCode::InvalidParameter, "context embedding must be non-zero");
  }
  if (creators_.empty()) throw Error(ErrorCode::InvalidParameter, "need at least one creator id");
  direction_ = context_.embedding;
}

MemoryRecord WorkloadGenerator::make_record(Timestamp t_last) {
  MemoryRecord r;
  r.id = content_rng_.uuid4();
  const bool near = content_rng_.coin(spec_.relevance_mix);
  const double c = near ? content_rng_.uniform(kNearCosine, 1.0)
                        : content_rng_.uniform(-1.0, kNearCosine);
  r.embedding = embedding_with_cosine(direction_, c, content_rng_);
  r.agent_id = creators_[static_cast<std::size_t>(
      content_rng_.uniform_int(0, static_cast<std::int64_t>(creators_.size()) - 1))];
  r.t_last = t_last;
  r.salience = content_rng_.uniform();
  return r;
}

std::vector<MemoryRecord> WorkloadGenerator::generate_initial() {
  std::vector<MemoryRecord> out;
  out.reserve(spec_.initial_items);
  for (std::size_t i = 0; i < spec_.initial_items; ++i) {
    out.push_back(make_record(content_rng_.uniform(0.0, spec_.history_window_s)));
  }
  return out;
}

void WorkloadGenerator::begin_epoch(int interactions) {
  arrival_steps_.clear();
  const auto count = arrival_rng_.uniform_int(spec_.arrivals_min, spec_.arrivals_max);
  const std::int64_t steps = std::max(1, interactions);
  for (std::int64_t k = 0; k < count; ++k) {
    arrival_steps_.push_back(static_cast<int>(k * steps / count));
  }
}

const ZipfSampler& WorkloadGenerator::sampler(std::size_t n) {
  if (!sampler_ || sampler_->size() != n) sampler_.emplace(n, spec_.access_skew);
  return *sampler_;
}

Interaction WorkloadGenerator::step(int step, std::span<const std::string> live_ids,
                                    Timestamp now) {
  Interaction out;
  if (!live_ids.empty()) {
    const auto& zipf = sampler(live_ids.size());
    for (int i = 0; i < spec_.accesses_per_interaction; ++i) {
      out.accesses.push_back(live_ids[zipf.sample(access_rng_)]);
    }
  }
  for (int s : arrival_steps_) {
    if (s == step) out.arrivals.push_back(make_record(now));
  }
  return out;
}

SummaryMetrics aggregate(std::span<const EpochReport> reports,
                         std::span<const std::size_t> baseline_footprints, bool strict) {
  if (reports.empty()) throw Error(ErrorCode::InvalidParameter, "no epoch reports to aggregate");
  if (baseline_footprints.size() != reports.size()) {
    throw Error(ErrorCode::LengthMismatch,
                fmt::format("{} reports but {} baseline footprints", reports.size(),
                            baseline_footprints.size()));
  }
  SummaryMetrics m;
  m.strict_pbft_success = strict;
  m.epochs = reports.size();
  m.initial_footprint = reports.front().memories_start;
  m.final_footprint = reports.back().memories_end;
  m.final_baseline = baseline_footprints.back();
  m.footprint_reduction =
      m.final_baseline == 0
          ? 0.0
          : 1.0 - static_cast<double>(m.final_footprint) / static_cast<double>(m.final_baseline);

  double rate_sum = 0.0;
  for (const auto& r : reports) {
    rate_sum += r.deletion_rate;
    m.cache_hits += r.cache_hits;
    m.cache_misses += r.cache_misses;
    m.total_deleted += r.deleted;
    const auto instances = r.consensus_reached + r.consensus_failed;
    m.total_instances += instances;
    m.total_timeouts += r.consensus_failed;
    m.total_virtual_s += r.elapsed_virtual_s;
    if (instances > 0) {
      ++m.epochs_with_instances;
      if (r.consensus_failed == 0) ++m.epochs_fully_decided;
    }
  }
  m.mean_deletion_rate = rate_sum / static_cast<double>(m.epochs);
  const auto lookups = m.cache_hits + m.cache_misses;
  m.cache_hit_rate =
      lookups == 0 ? 0.0 : static_cast<double>(m.cache_hits) / static_cast<double>(lookups);

  const auto vacuous = m.epochs - m.epochs_with_instances;
  if (strict) {
    m.pbft_success_rate = m.epochs_with_instances == 0
                              ? 1.0
                              : static_cast<double>(m.epochs_fully_decided) /
                                    static_cast<double>(m.epochs_with_instances);
  } else {
    m.pbft_success_rate = static_cast<double>(m.epochs_fully_decided + vacuous) /
                          static_cast<double>(m.epochs);
  }
  return m;
}

}  // namespace coforget
