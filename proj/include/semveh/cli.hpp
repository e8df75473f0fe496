#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semveh/config.hpp"

namespace semveh {

inline constexpr const char* kVersion = "semveh 0.1.0";

/// Options shared by the subcommands; tools/main.cpp fills these from CLI11.
struct CliOptions {
  std::string config_path;
  std::string from_manifest;
  std::vector<std::string> overrides;  // --set section.key=value
  std::string out_dir = "runs/out";
  int num_seeds = 0;  // --seeds: use the first N config seeds (0 = all)
  bool timing = false;  // write measured wallclock into train CSVs

  // eval
  std::string checkpoint;
  int episodes = 100;
  std::string policy = "greedy";  // greedy | random
  bool dump_channel = false;

  // sweep
  std::string axis = "num_vehicles";
  std::vector<Scalar> axis_values;
  std::vector<std::string> methods = {"gae_ppo", "random"};

  // oracle
  int oracle_states = 1;
  int histogram_bins = 50;

  // extract
  std::string fixtures_dir = "data/fixtures";
  std::string remote_url;  // empty: mock backend
};

int cmd_train(const CliOptions& opts);
int cmd_eval(const CliOptions& opts);
int cmd_sweep(const CliOptions& opts);
int cmd_oracle(const CliOptions& opts);
int cmd_extract(const CliOptions& opts);

/// Resolved config + seed list for a command invocation (config file or
/// manifest, then --set overrides, then --seeds truncation/extension).
struct ResolvedRun {
  Config config;
  std::vector<std::uint64_t> seeds;
};
ResolvedRun resolve_run(const CliOptions& opts);

}  // namespace semveh
