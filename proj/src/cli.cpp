#include "coforget/cli.hpp"

#include <ostream>
#include <vector>

#include <fmt/format.h>

#include "coforget/report.hpp"
#include "coforget/simulation.hpp"

namespace coforget {

namespace {

int exit_code_for(const Error& e) {
  return e.code() == ErrorCode::Io ? kExitIo : kExitConfig;
}

}  // namespace

int cmd_run(const RunManifest& m, std::ostream& out, std::ostream& err) {
  const auto scenario = parse_scenario(m.scenario);
  if (!scenario) {
    err << fmt::format("error: unknown scenario '{}'\n", m.scenario);
    return kExitConfig;
  }
  if (m.epochs < 1) {
    err << "error: --epochs must be at least 1\n";
    return kExitConfig;
  }
  if (m.seeds && *m.seeds < 1) {
    err << "error: --seeds must be at least 1\n";
    return kExitConfig;
  }

  RunConfig base;
  try {
    base = scenario_config(*scenario);
    if (m.config) base = apply_config_file(std::move(base), *m.config);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  if (const auto bad = check_run_config(base); !bad.empty()) {
    for (const auto& v : bad) err << "error: " << v.message << '\n';
    return kExitConfig;
  }

  const std::uint64_t first = m.seed.value_or(base.protocol.rng_seed);
  std::vector<std::pair<std::uint64_t, std::filesystem::path>> runs;
  if (m.seeds) {
    for (std::size_t k = 0; k < *m.seeds; ++k) {
      const auto seed = first + k;
      runs.emplace_back(seed, std::filesystem::path(fmt::format("{}_seed{}", m.out.string(), seed)));
    }
  } else {
    runs.emplace_back(first, m.out);
  }

  for (const auto& [seed, dir] : runs) {
    RunConfig run = base;
    apply_seed(run, seed);
    try {
      const auto result = run_simulation(run, m.epochs, m.strict_pbft_success);
      write_outputs(dir, run, m.scenario, result);
      const auto& s = result.summary;
      out << fmt::format(
          "seed {}: epochs {} footprint {} -> {} (baseline {}) reduction {:.4f} "
          "pbft_success {:.4f} cache_hit {:.4f} -> {}\n",
          seed, s.epochs, s.initial_footprint, s.final_footprint, s.final_baseline,
          s.footprint_reduction, s.pbft_success_rate, s.cache_hit_rate, dir.string());
    } catch (const Error& e) {
      err << "error: " << e.what() << '\n';
      return exit_code_for(e);
    }
  }
  return kExitOk;
}

int cmd_validate(const std::filesystem::path& config, std::ostream& out, std::ostream& err) {
  RunConfig run;
  try {
    run = apply_config_file(scenario_config(Scenario::custom), config);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  const auto bad = check_run_config(run);
  for (const auto& v : bad) out << to_string(v.code) << ": " << v.message << '\n';
  if (!bad.empty()) return kExitConfig;
  out << fmt::format("{}: ok\n", config.string());
  return kExitOk;
}

}  // namespace coforget
