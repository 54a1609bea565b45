// coforget: run forgetting simulations and validate config files.

#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "coforget/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Collective memory forgetting simulator"};
  app.require_subcommand(1);

  coforget::RunManifest manifest;
  std::string config_path;
  std::uint64_t seed = 0;
  std::size_t seeds = 0;

  auto* run = app.add_subcommand("run", "Run a simulation and write report.json, epochs.csv, audit.jsonl");
  run->add_option("--config", config_path, "Flat key = value config file");
  run->add_option("--scenario", manifest.scenario,
                  "baseline_no_faults | byzantine_f1 | cache_profile | custom")
      ->capture_default_str();
  run->add_option("--epochs", manifest.epochs, "Number of epochs")->capture_default_str();
  auto* seed_opt = run->add_option("--seed", seed, "Seed for every random stream");
  auto* seeds_opt = run->add_option("--seeds", seeds, "Run K seeds into <out>_seed<N> directories");
  run->add_option("--out", manifest.out, "Output directory")->capture_default_str();
  run->add_flag("--strict-pbft-success", manifest.strict_pbft_success,
                "Exclude epochs without PBFT instances from the success rate");

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a config file");
  validate->add_option("config", validate_path, "Config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : coforget::kExitConfig;
  }

  if (*run) {
    if (!config_path.empty()) manifest.config = config_path;
    if (*seed_opt) manifest.seed = seed;
    if (*seeds_opt) manifest.seeds = seeds;
    return coforget::cmd_run(manifest, std::cout, std::cerr);
  }
  return coforget::cmd_validate(validate_path, std::cout, std::cerr);
}
