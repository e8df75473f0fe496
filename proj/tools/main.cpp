#include <CLI11.hpp>

#include <iostream>

#include "semveh/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"semveh: V2X semantic-transmission simulator with a GAE-PPO learner"};
  app.set_version_flag("--version", std::string(semveh::kVersion));
  app.require_subcommand(1);

  semveh::CliOptions opts;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", opts.config_path, "Config file (.toml or .json)");
    cmd->add_option("--from-manifest", opts.from_manifest,
                    "Rerun with the resolved config of a previous manifest");
    cmd->add_option("--set", opts.overrides, "Override, e.g. --set train.gae_lambda=0");
    cmd->add_option("--out", opts.out_dir, "Output directory");
    cmd->add_option("--seeds", opts.num_seeds, "Number of seeds (extends the config list)");
  };

  CLI::App* train = app.add_subcommand("train", "Train GAE-PPO policies, one run per seed");
  add_common(train);
  train->add_flag("--timing", opts.timing, "Record wallclock seconds in the training CSV");

  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint (or the random baseline)");
  add_common(eval);
  eval->add_option("--checkpoint", opts.checkpoint, "Checkpoint JSON from train");
  eval->add_option("--episodes", opts.episodes, "Evaluation episodes");
  eval->add_option("--policy", opts.policy, "greedy | random");
  eval->add_flag("--dump-channel", opts.dump_channel, "Also write a per-step channel trace CSV");

  CLI::App* sweep = app.add_subcommand("sweep", "Train/evaluate across an axis of scenarios");
  add_common(sweep);
  sweep->add_option("--axis", opts.axis, "num_vehicles | u_max");
  sweep->add_option("--values", opts.axis_values, "Axis values, e.g. --values 4 8 12 16");
  sweep->add_option("--methods", opts.methods, "Subset of gae_ppo pure_ppo random");

  CLI::App* oracle = app.add_subcommand("oracle", "Exhaustive single-step optimum + histogram");
  add_common(oracle);
  oracle->add_option("--states", opts.oracle_states, "Number of frozen channel states");
  oracle->add_option("--bins", opts.histogram_bins, "Histogram bins");

  CLI::App* extract = app.add_subcommand("extract", "Semantic-extraction compression report");
  add_common(extract);
  extract->add_option("--fixtures", opts.fixtures_dir, "Fixture directory");
  extract->add_option("--remote", opts.remote_url,
                      "OpenAI-compatible base URL (default: offline mock backend)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return semveh::cmd_train(opts);
    if (eval->parsed()) return semveh::cmd_eval(opts);
    if (sweep->parsed()) return semveh::cmd_sweep(opts);
    if (oracle->parsed()) return semveh::cmd_oracle(opts);
    if (extract->parsed()) return semveh::cmd_extract(opts);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
