#include "coforget/core.hpp"

#include <charconv>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

namespace coforget {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidQuorumFraction: return "InvalidQuorumFraction";
    case ErrorCode::FaultBoundViolation: return "FaultBoundViolation";
    case ErrorCode::WeightSumViolation: return "WeightSumViolation";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::InvalidParameter: return "InvalidParameter";
    case ErrorCode::ConfigSyntax: return "ConfigSyntax";
    case ErrorCode::NegativeAge: return "NegativeAge";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NoActiveAgents: return "NoActiveAgents";
    case ErrorCode::UnknownAgent: return "UnknownAgent";
    case ErrorCode::DuplicateInstance: return "DuplicateInstance";
    case ErrorCode::StaleEpoch: return "StaleEpoch";
    case ErrorCode::ConsensusTimeout: return "ConsensusTimeout";
    case ErrorCode::UnknownDestination: return "UnknownDestination";
    case ErrorCode::TruncatedFrame: return "TruncatedFrame";
    case ErrorCode::UnknownMessageKind: return "UnknownMessageKind";
    case ErrorCode::OversizeFrame: return "OversizeFrame";
    case ErrorCode::MalformedFrame: return "MalformedFrame";
    case ErrorCode::ProposalTimeout: return "ProposalTimeout";
    case ErrorCode::TransportClosed: return "TransportClosed";
    case ErrorCode::EmptyIndex: return "EmptyIndex";
    case ErrorCode::EmptyPopulation: return "EmptyPopulation";
    case ErrorCode::Io: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(fmt::format("{}: {}", to_string(code), what)), code_(code) {}

std::string_view to_string(Vote v) { return v == Vote::keep ? "keep" : "forget"; }

bool same_contents(const MemoryRecord& a, const MemoryRecord& b) {
  return a.id == b.id && a.embedding == b.embedding && a.agent_id == b.agent_id &&
         a.t_last == b.t_last && a.salience == b.salience;
}

std::string_view to_string(FaultKind kind) {
  switch (kind) {
    case FaultKind::honest: return "honest";
    case FaultKind::silent_half: return "silent_half";
    case FaultKind::equivocate_half: return "equivocate_half";
    case FaultKind::silent_or_equivocate: return "silent_or_equivocate";
  }
  return "honest";
}

std::optional<FaultKind> parse_fault_kind(std::string_view text) {
  for (auto k : {FaultKind::honest, FaultKind::silent_half, FaultKind::equivocate_half,
                 FaultKind::silent_or_equivocate}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

namespace {

constexpr double kSumTolerance = 1e-9;

bool open_unit(double x) { return x > 0.0 && x < 1.0; }

}  // namespace

std::vector<ConfigViolation> check_config(const ProtocolConfig& cfg) {
  std::vector<ConfigViolation> out;
  auto fail = [&](ErrorCode code, std::string msg) { out.push_back({code, std::move(msg)}); };

  if (!(cfg.alpha > 0.5 && cfg.alpha <= 1.0)) {
    fail(ErrorCode::InvalidQuorumFraction,
         fmt::format("alpha must lie in (0.5, 1], got {}", cfg.alpha));
  }
  if (cfg.f < 0) {
    fail(ErrorCode::FaultBoundViolation, fmt::format("f must be non-negative, got {}", cfg.f));
  } else if (cfg.n_agents < 3 * cfg.f + 1) {
    fail(ErrorCode::FaultBoundViolation,
         fmt::format("N ≥ 3f+1 violated: N={}, f={} needs N ≥ {}", cfg.n_agents, cfg.f,
                     3 * cfg.f + 1));
  }
  if (cfg.decay_scales.empty() || cfg.decay_scales.size() != cfg.decay_weights.size()) {
    fail(ErrorCode::LengthMismatch,
         fmt::format("decay_scales ({}) and decay_weights ({}) must have the same non-zero length",
                     cfg.decay_scales.size(), cfg.decay_weights.size()));
  }
  if (!cfg.decay_weights.empty()) {
    bool in_range = true;
    for (double g : cfg.decay_weights) in_range = in_range && g >= 0.0 && g <= 1.0;
    const double sum = std::accumulate(cfg.decay_weights.begin(), cfg.decay_weights.end(), 0.0);
    if (!in_range || std::abs(sum - 1.0) > kSumTolerance) {
      fail(ErrorCode::WeightSumViolation,
           fmt::format("decay_weights must each lie in [0,1] and sum to 1, sum is {}", sum));
    }
  }
  if (!(cfg.omega_d >= 0.0 && cfg.omega_r >= 0.0) ||
      std::abs(cfg.omega_d + cfg.omega_r - 1.0) > kSumTolerance) {
    fail(ErrorCode::WeightSumViolation,
         fmt::format("omega_d + omega_r must equal 1, got {} + {}", cfg.omega_d, cfg.omega_r));
  }
  for (double s : cfg.decay_scales) {
    if (!(s > 0.0) || !std::isfinite(s)) {
      fail(ErrorCode::InvalidParameter, fmt::format("decay scale must be positive, got {}", s));
      break;
    }
  }
  if (!open_unit(cfg.decay_threshold)) {
    fail(ErrorCode::InvalidParameter,
         fmt::format("decay_threshold must lie in (0,1), got {}", cfg.decay_threshold));
  }
  if (!open_unit(cfg.vote_threshold)) {
    fail(ErrorCode::InvalidParameter,
         fmt::format("vote_threshold must lie in (0,1), got {}", cfg.vote_threshold));
  }
  if (!(cfg.variance_warn >= 0.0)) {
    fail(ErrorCode::InvalidParameter, "variance_warn must be non-negative");
  }
  if (cfg.epoch_interactions < 1) {
    fail(ErrorCode::InvalidParameter, "epoch_interactions must be at least 1");
  }
  if (cfg.cache_capacity < 1) fail(ErrorCode::InvalidParameter, "cache_capacity must be at least 1");
  if (cfg.batch_size < 1) fail(ErrorCode::InvalidParameter, "batch_size must be at least 1");
  if (!(cfg.batch_interval_s >= 0.0)) {
    fail(ErrorCode::InvalidParameter, "batch_interval_s must be non-negative");
  }
  if (cfg.dimension < 1) fail(ErrorCode::InvalidParameter, "dimension must be at least 1");
  if (cfg.pbft_budget_factor < 1) {
    fail(ErrorCode::InvalidParameter, "pbft_budget_factor must be at least 1");
  }
  return out;
}

ProtocolConfig validate_config(ProtocolConfig cfg) {
  auto violations = check_config(cfg);
  if (!violations.empty()) throw Error(violations.front().code, violations.front().message);
  return cfg;
}

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void bad_value(std::string_view key, std::string_view text, std::string_view want) {
  throw Error(ErrorCode::ConfigSyntax,
              fmt::format("key '{}': expected {}, got '{}'", key, want, text));
}

}  // namespace

KeyValueMap parse_key_values(std::string_view text) {
  KeyValueMap kv;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;

    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    line = trim(line);
    if (line.empty()) continue;

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ConfigSyntax, fmt::format("line {}: missing '='", line_no));
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) {
      throw Error(ErrorCode::ConfigSyntax, fmt::format("line {}: empty key", line_no));
    }
    if (!kv.emplace(std::string(key), std::string(value)).second) {
      throw Error(ErrorCode::ConfigSyntax,
                  fmt::format("line {}: duplicate key '{}'", line_no, key));
    }
  }
  return kv;
}

namespace {

std::optional<double> to_double(std::string_view s) {
  s = trim(s);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size()) return std::nullopt;
  return v;
}

}  // namespace

double parse_real(std::string_view key, std::string_view text) {
  text = trim(text);
  if (const auto slash = text.find('/'); slash != std::string_view::npos) {
    auto num = to_double(text.substr(0, slash));
    auto den = to_double(text.substr(slash + 1));
    if (!num || !den || *den == 0.0) bad_value(key, text, "a real or a/b rational");
    return *num / *den;
  }
  auto v = to_double(text);
  if (!v) bad_value(key, text, "a real number");
  return *v;
}

std::int64_t parse_integer(std::string_view key, std::string_view text) {
  text = trim(text);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size()) bad_value(key, text, "an integer");
  return v;
}

bool parse_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  bad_value(key, text, "true or false");
}

std::vector<std::string> parse_string_list(std::string_view text) {
  std::vector<std::string> out;
  text = trim(text);
  if (text.empty()) return out;
  while (true) {
    const auto comma = text.find(',');
    out.emplace_back(trim(text.substr(0, comma)));
    if (comma == std::string_view::npos) break;
    text = text.substr(comma + 1);
  }
  return out;
}

std::vector<double> parse_real_list(std::string_view key, std::string_view text) {
  std::vector<double> out;
  for (const auto& item : parse_string_list(text)) out.push_back(parse_real(key, item));
  return out;
}

namespace {

template <typename T>
T checked_unsigned(std::string_view key, std::string_view text) {
  const auto v = parse_integer(key, text);
  if (v < 0) bad_value(key, text, "a non-negative integer");
  return static_cast<T>(v);
}

}  // namespace

void apply_protocol_keys(ProtocolConfig& cfg, KeyValueMap& kv) {
  auto take = [&](std::string_view key) -> std::optional<std::string> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    std::string v = it->second;
    kv.erase(it);
    return v;
  };

  if (auto v = take("n_agents")) cfg.n_agents = static_cast<int>(parse_integer("n_agents", *v));
  if (auto v = take("f")) cfg.f = static_cast<int>(parse_integer("f", *v));
  if (auto v = take("alpha")) cfg.alpha = parse_real("alpha", *v);
  if (auto v = take("decay_scales")) cfg.decay_scales = parse_real_list("decay_scales", *v);
  if (auto v = take("decay_weights")) cfg.decay_weights = parse_real_list("decay_weights", *v);
  if (auto v = take("decay_threshold")) cfg.decay_threshold = parse_real("decay_threshold", *v);
  if (auto v = take("variance_warn")) cfg.variance_warn = parse_real("variance_warn", *v);
  if (auto v = take("omega_d")) cfg.omega_d = parse_real("omega_d", *v);
  if (auto v = take("omega_r")) cfg.omega_r = parse_real("omega_r", *v);
  if (auto v = take("vote_threshold")) cfg.vote_threshold = parse_real("vote_threshold", *v);
  if (auto v = take("epoch_interactions")) {
    cfg.epoch_interactions = static_cast<int>(parse_integer("epoch_interactions", *v));
  }
  if (auto v = take("cache_capacity")) {
    cfg.cache_capacity = checked_unsigned<std::size_t>("cache_capacity", *v);
  }
  if (auto v = take("batch_size")) cfg.batch_size = checked_unsigned<std::size_t>("batch_size", *v);
  if (auto v = take("batch_interval_s")) cfg.batch_interval_s = parse_real("batch_interval_s", *v);
  if (auto v = take("rng_seed")) cfg.rng_seed = checked_unsigned<std::uint64_t>("rng_seed", *v);
  if (auto v = take("dimension")) cfg.dimension = checked_unsigned<std::size_t>("dimension", *v);
  if (auto v = take("pbft_budget_factor")) {
    cfg.pbft_budget_factor = static_cast<int>(parse_integer("pbft_budget_factor", *v));
  }
  if (auto v = take("silent_counts_active")) {
    cfg.silent_counts_active = parse_bool("silent_counts_active", *v);
  }
}

}  // namespace coforget
