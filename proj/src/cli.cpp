#include "semveh/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <thread>

#include <nlohmann/json.hpp>

#include "semveh/extractor.hpp"
#include "semveh/io.hpp"
#include "semveh/oracle.hpp"
#include "semveh/ppo.hpp"
#include "semveh/units.hpp"

namespace semveh {

namespace fs = std::filesystem;

namespace {

std::uint64_t run_seed(const Config& config, std::uint64_t train_seed) {
  return splitmix64(train_seed ^ splitmix64(config.scenario.seed));
}

std::string seed_tag(std::uint64_t seed) { return "seed" + std::to_string(seed); }

struct TrainRunResult {
  std::uint64_t seed = 0;
  EvalStats final_eval;
  std::string log_path;
  std::string checkpoint_path;
  bool failed = false;
  std::string error;
};

/// Trains one seed to completion, writing the training-log CSV and final
/// checkpoint. Wallclock is only recorded with opts.timing (reruns from a
/// manifest must be byte-identical).
TrainRunResult train_one_seed(const Config& config, std::uint64_t seed,
                              const std::string& out_dir, const std::string& manifest_note,
                              bool timing) {
  TrainRunResult result;
  result.seed = seed;
  const std::uint64_t master = run_seed(config, seed);
  VehicularRolloutEnv env(config.scenario, config.train.penalty_lambda1,
                          config.train.penalty_lambda2, master);
  TrainerState ts = TrainerState::make(env, config.train, master);

  result.log_path = out_dir + "/train_" + seed_tag(seed) + ".csv";
  result.checkpoint_path = out_dir + "/checkpoint_" + seed_tag(seed) + ".json";
  CsvWriter log(result.log_path, manifest_note,
                {"iteration", "mean_return", "actor_loss", "critic_loss", "kl", "lr",
                 "wallclock_s"});

  const auto start = std::chrono::steady_clock::now();
  for (int it = 0; it < config.train.iterations; ++it) {
    const IterationStats stats = train_iteration(env, ts, config.train);
    const Scalar wallclock =
        timing ? std::chrono::duration<Scalar>(std::chrono::steady_clock::now() - start).count()
               : 0.0;
    log.row({CsvWriter::format(it), CsvWriter::format(stats.mean_return),
             CsvWriter::format(stats.actor_loss), CsvWriter::format(stats.critic_loss),
             CsvWriter::format(stats.kl), CsvWriter::format(stats.lr),
             CsvWriter::format(wallclock)});
    if (config.train.checkpoint_every > 0 && (it + 1) % config.train.checkpoint_every == 0 &&
        it + 1 < config.train.iterations) {
      save_checkpoint(out_dir + "/checkpoint_" + seed_tag(seed) + "_iter" + std::to_string(it + 1) +
                          ".json",
                      ts, config);
    }
  }
  save_checkpoint(result.checkpoint_path, ts, config);

  VehicularRolloutEnv eval_env(config.scenario, config.train.penalty_lambda1,
                               config.train.penalty_lambda2, splitmix64(master ^ 0xe7a1ULL));
  result.final_eval = evaluate_policy(eval_env, greedy_policy(ts.ac), config.train.eval_episodes);
  return result;
}

std::vector<TrainRunResult> train_all_seeds(const Config& config,
                                            const std::vector<std::uint64_t>& seeds,
                                            const std::string& out_dir,
                                            const std::string& manifest_note, bool timing) {
  std::vector<TrainRunResult> results(seeds.size());
  const unsigned workers =
      std::min<unsigned>(std::max(1u, std::thread::hardware_concurrency()),
                         static_cast<unsigned>(seeds.size()));
  std::vector<std::thread> pool;
  std::mutex next_mutex;
  std::size_t next = 0;
  for (unsigned wk = 0; wk < workers; ++wk) {
    pool.emplace_back([&]() {
      while (true) {
        std::size_t mine;
        {
          std::lock_guard<std::mutex> lock(next_mutex);
          if (next >= seeds.size()) return;
          mine = next++;
        }
        try {
          results[mine] = train_one_seed(config, seeds[mine], out_dir, manifest_note, timing);
        } catch (const std::exception& e) {
          results[mine].seed = seeds[mine];
          results[mine].failed = true;
          results[mine].error = e.what();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  return results;
}

Config config_for_axis(const Config& base, const std::string& axis, Scalar value) {
  Config c = base;
  if (axis == "num_vehicles") {
    const int v = static_cast<int>(value);
    c.scenario.num_vehicles = v;
    c.scenario.num_v2i = v;
    c.scenario.num_v2v = v;
  } else if (axis == "u_max") {
    c.scenario.u_max = static_cast<int>(value);
  } else {
    throw ConfigError("sweep axis must be num_vehicles or u_max, got " + axis);
  }
  c.validate();
  return c;
}

}  // namespace

ResolvedRun resolve_run(const CliOptions& opts) {
  nlohmann::json j;
  if (!opts.from_manifest.empty()) {
    const RunManifest m = RunManifest::load(opts.from_manifest);
    j = config_to_json(m.config);
  } else if (!opts.config_path.empty()) {
    j = config_to_json(load_config(opts.config_path));
  } else {
    j = config_to_json(Config{});
  }
  for (const std::string& ov : opts.overrides) apply_override(j, ov);
  ResolvedRun run;
  run.config = config_from_json(j);
  run.seeds = run.config.train.seeds;
  if (opts.num_seeds > 0) {
    while (static_cast<int>(run.seeds.size()) < opts.num_seeds) {
      run.seeds.push_back(run.seeds.back() + 1);
    }
    run.seeds.resize(opts.num_seeds);
  }
  return run;
}

int cmd_train(const CliOptions& opts) {
  const ResolvedRun run = resolve_run(opts);
  fs::create_directories(opts.out_dir);

  RunManifest manifest;
  manifest.command = "train";
  manifest.config = run.config;
  manifest.seeds = run.seeds;
  manifest.out_dir = opts.out_dir;
  manifest.version = kVersion;
  manifest.created_utc = utc_timestamp();

  const auto results =
      train_all_seeds(run.config, run.seeds, opts.out_dir, manifest.note(), opts.timing);

  bool ok = true;
  for (const auto& r : results) {
    if (r.failed) {
      std::cerr << "train seed " << r.seed << " failed: " << r.error << "\n";
      ok = false;
      continue;
    }
    manifest.outputs.push_back(r.log_path);
    manifest.outputs.push_back(r.checkpoint_path);
    std::cout << "seed " << r.seed << ": final eval return " << r.final_eval.mean_return
              << ", episode QoE " << r.final_eval.mean_episode_qoe << "\n";
  }
  manifest.save(opts.out_dir + "/manifest.json");
  return ok ? 0 : 1;
}

int cmd_eval(const CliOptions& opts) {
  const ResolvedRun run = resolve_run(opts);
  const Config& config = run.config;
  fs::create_directories(opts.out_dir);

  RunManifest manifest;
  manifest.command = "eval";
  manifest.config = config;
  manifest.seeds = {run.seeds.front()};
  manifest.out_dir = opts.out_dir;
  manifest.version = kVersion;
  manifest.created_utc = utc_timestamp();
  manifest.params["episodes"] = std::to_string(opts.episodes);
  manifest.params["policy"] = opts.policy;
  if (!opts.checkpoint.empty()) manifest.params["checkpoint"] = opts.checkpoint;

  const std::uint64_t master = run_seed(config, run.seeds.front());
  VehicularRolloutEnv env(config.scenario, config.train.penalty_lambda1,
                          config.train.penalty_lambda2, splitmix64(master ^ 0xe7a1ULL));

  PolicyFn policy;
  TrainerState ts;
  if (opts.policy == "random") {
    policy = random_policy(env.action_head_sizes(),
                           std::make_shared<Rng>(splitmix64(master ^ 0x9a9dULL)));
  } else {
    if (opts.checkpoint.empty()) {
      std::cerr << "eval: --checkpoint is required for the greedy policy\n";
      return 1;
    }
    ts = load_checkpoint(opts.checkpoint, config);
    policy = greedy_policy(ts.ac);
  }

  const std::string metrics_path = opts.out_dir + "/eval_metrics.csv";
  const std::string demand_path = opts.out_dir + "/eval_demand.csv";
  CsvWriter metrics(metrics_path, manifest.note(),
                    {"episode", "step", "vehicle", "reward", "qoe", "xi_min", "sinr_min_db",
                     "remaining_words"});
  std::unique_ptr<CsvWriter> trace;
  if (opts.dump_channel) {
    trace = std::make_unique<CsvWriter>(opts.out_dir + "/channel_trace.csv", manifest.note(),
                                        std::vector<std::string>{"step", "link_kind", "tx", "rx",
                                                                 "w", "gain_db"});
  }

  const int Q = config.scenario.num_v2v;
  Vector<> steps_sum = Vector<>::Zero(Q);
  Vector<> unmet_sum = Vector<>::Zero(Q);
  Scalar return_sum = 0.0;
  long global_step = 0;

  for (int ep = 0; ep < opts.episodes; ++ep) {
    Vector<> state = env.reset();
    bool done = false;
    int step = 0;
    while (!done) {
      if (trace) {
        const ChannelState& ch = env.env().channel();
        const Topology& topo = env.env().topology();
        for (int w = 0; w < config.scenario.num_v2i; ++w) {
          trace->row({CsvWriter::format(static_cast<int>(global_step)), "v2i_bs",
                      CsvWriter::format(topo.v2i_tx_vehicle[w]), "-1", CsvWriter::format(w),
                      CsvWriter::format(linear_to_db(ch.h_v2i_bs(w)))});
        }
        for (int q = 0; q < Q; ++q) {
          for (int w = 0; w < config.scenario.num_v2i; ++w) {
            trace->row({CsvWriter::format(static_cast<int>(global_step)), "v2v_own",
                        CsvWriter::format(topo.v2v_pairs[q].first),
                        CsvWriter::format(topo.v2v_pairs[q].second), CsvWriter::format(w),
                        CsvWriter::format(linear_to_db(ch.h_v2v_own(q, w)))});
          }
        }
      }
      const VectorInt<> indices = policy(state);
      Action act = env.env().action_from_indices(indices);
      const Action projected = project_action(act, config.scenario);
      const StepResult res = env.env().step(projected);
      ++step;
      ++global_step;
      return_sum += res.reward;
      for (int q = 0; q < Q; ++q) {
        const bool active = projected.subband(q) >= 0;
        metrics.row({CsvWriter::format(ep), CsvWriter::format(step), CsvWriter::format(q),
                     CsvWriter::format(res.reward), CsvWriter::format(res.qoe),
                     CsvWriter::format(res.diag.xi(q)),
                     active ? CsvWriter::format(res.diag.sinr_v2v_db(q)) : "nan",
                     CsvWriter::format(env.env().demand().remaining_words(q))});
      }
      state = res.state;
      done = res.done;
    }
    const EpisodeMetrics em = episode_metrics(env.env().demand(), step);
    for (int q = 0; q < Q; ++q) {
      steps_sum(q) += em.steps_to_fulfillment(q);
      if (em.unmet[q]) unmet_sum(q) += 1.0;
    }
  }

  CsvWriter demand(demand_path, manifest.note(),
                   {"vehicle", "mean_steps_to_demand", "unmet_fraction"});
  for (int q = 0; q < Q; ++q) {
    demand.row({CsvWriter::format(q), CsvWriter::format(steps_sum(q) / opts.episodes),
                CsvWriter::format(unmet_sum(q) / opts.episodes)});
  }

  manifest.outputs.push_back(metrics_path);
  manifest.outputs.push_back(demand_path);
  manifest.save(opts.out_dir + "/manifest.json");
  std::cout << "eval: mean return " << return_sum / opts.episodes << " over " << opts.episodes
            << " episodes\n";
  return 0;
}

int cmd_sweep(const CliOptions& opts) {
  const ResolvedRun run = resolve_run(opts);
  fs::create_directories(opts.out_dir);
  std::vector<Scalar> values = opts.axis_values;
  std::string axis = opts.axis;
  if (!opts.from_manifest.empty()) {
    const RunManifest prev = RunManifest::load(opts.from_manifest);
    if (!prev.axis.empty()) {
      axis = prev.axis;
      values = prev.axis_values;
    }
  }
  if (values.empty()) {
    std::cerr << "sweep: --values is required\n";
    return 1;
  }

  RunManifest manifest;
  manifest.command = "sweep";
  manifest.config = run.config;
  manifest.seeds = run.seeds;
  manifest.out_dir = opts.out_dir;
  manifest.version = kVersion;
  manifest.created_utc = utc_timestamp();
  manifest.axis = axis;
  manifest.axis_values = values;

  struct Point {
    Scalar value;
    std::string method;
    std::vector<Scalar> qoes;  // per seed
  };
  std::vector<Point> points;
  std::vector<std::string> failures;

  for (Scalar v : values) {
    Config cfg;
    try {
      cfg = config_for_axis(run.config, axis, v);
    } catch (const std::exception& e) {
      failures.push_back("value " + CsvWriter::format(v) + ": " + e.what());
      continue;
    }
    for (const std::string& method : opts.methods) {
      Point point{v, method, {}};
      for (std::uint64_t seed : run.seeds) {
        try {
          Config cfg_m = cfg;
          if (method == "pure_ppo") cfg_m.train.gae_lambda = 0.0;
          const std::uint64_t master = run_seed(cfg_m, seed);
          VehicularRolloutEnv eval_env(cfg_m.scenario, cfg_m.train.penalty_lambda1,
                                       cfg_m.train.penalty_lambda2,
                                       splitmix64(master ^ 0xe7a1ULL));
          EvalStats stats;
          if (method == "random") {
            stats = evaluate_policy(eval_env,
                                    random_policy(eval_env.action_head_sizes(),
                                                  std::make_shared<Rng>(splitmix64(master ^ 0x9a9dULL))),
                                    cfg_m.train.eval_episodes);
          } else {
            VehicularRolloutEnv env(cfg_m.scenario, cfg_m.train.penalty_lambda1,
                                    cfg_m.train.penalty_lambda2, master);
            TrainerState ts = TrainerState::make(env, cfg_m.train, master);
            for (int it = 0; it < cfg_m.train.iterations; ++it) {
              train_iteration(env, ts, cfg_m.train);
            }
            stats = evaluate_policy(eval_env, greedy_policy(ts.ac), cfg_m.train.eval_episodes);
          }
          point.qoes.push_back(stats.mean_step_qoe);
        } catch (const std::exception& e) {
          failures.push_back("value " + CsvWriter::format(v) + " method " + method + " seed " +
                             std::to_string(seed) + ": " + e.what());
        }
      }
      points.push_back(std::move(point));
    }
  }

  const std::string agg_path = opts.out_dir + "/sweep_aggregate.csv";
  CsvWriter agg(agg_path, manifest.note(), {"axis_value", "method", "mean_qoe", "ci95"});
  for (const auto& p : points) {
    if (p.qoes.empty()) continue;
    const Scalar n = static_cast<Scalar>(p.qoes.size());
    Scalar mean = 0.0;
    for (Scalar q : p.qoes) mean += q;
    mean /= n;
    Scalar var = 0.0;
    for (Scalar q : p.qoes) var += (q - mean) * (q - mean);
    const Scalar ci95 = n > 1 ? 1.96 * std::sqrt(var / (n - 1)) / std::sqrt(n) : 0.0;
    agg.row({CsvWriter::format(p.value), p.method, CsvWriter::format(mean),
             CsvWriter::format(ci95)});
  }
  manifest.outputs.push_back(agg_path);

  const std::string plot_path = opts.out_dir + "/plot_sweep.gp";
  {
    std::ofstream plot(plot_path);
    plot << "set datafile separator ','\n"
         << "set key left top\n"
         << "set xlabel '" << axis << "'\n"
         << "set ylabel 'mean QoE per step'\n"
         << "set terminal pngcairo size 800,600\n"
         << "set output 'sweep_qoe.png'\n"
         << "methods = '";
    for (std::size_t i = 0; i < opts.methods.size(); ++i) {
      plot << opts.methods[i] << (i + 1 < opts.methods.size() ? " " : "");
    }
    plot << "'\n"
         << "plot for [m in methods] 'sweep_aggregate.csv' skip 1 "
            "using 1:(strcol(2) eq m ? $3 : 1/0):4 with yerrorlines title m\n";
  }
  manifest.outputs.push_back(plot_path);

  if (!failures.empty()) {
    const std::string fail_path = opts.out_dir + "/sweep_failures.csv";
    CsvWriter fail(fail_path, manifest.note(), {"failure"});
    for (const auto& f : failures) {
      std::string cell = f;
      std::replace(cell.begin(), cell.end(), ',', ';');
      fail.row({cell});
      std::cerr << "sweep point failed: " << f << "\n";
    }
    manifest.outputs.push_back(fail_path);
  }
  manifest.save(opts.out_dir + "/manifest.json");
  return 0;
}

int cmd_oracle(const CliOptions& opts) {
  const ResolvedRun run = resolve_run(opts);
  const Config& config = run.config;
  fs::create_directories(opts.out_dir);

  RunManifest manifest;
  manifest.command = "oracle";
  manifest.config = config;
  manifest.seeds = {run.seeds.front()};
  manifest.out_dir = opts.out_dir;
  manifest.version = kVersion;
  manifest.created_utc = utc_timestamp();
  manifest.params["states"] = std::to_string(opts.oracle_states);

  const ActionSpaceIndex index = enumerate_feasible(config.scenario);
  VehicularEnv env(config.scenario, config.train.penalty_lambda1, config.train.penalty_lambda2,
                   run_seed(config, run.seeds.front()));

  const std::string opt_path = opts.out_dir + "/oracle_optimum.csv";
  CsvWriter optimum(opt_path, manifest.note(),
                    {"state", "best_reward", "action_count", "subbands", "power_levels_dbm", "u"});

  Scalar vmin = std::numeric_limits<Scalar>::infinity();
  Scalar vmax = -vmin;
  std::vector<std::vector<Scalar>> all_values(opts.oracle_states);
  for (int s = 0; s < opts.oracle_states; ++s) {
    env.reset();
    OracleResult res = best_single_step(env, index);
    all_values[s] = std::move(res.all_rewards);
    for (Scalar v : all_values[s]) {
      vmin = std::min(vmin, v);
      vmax = std::max(vmax, v);
    }
    std::string subbands, powers, us;
    for (int q = 0; q < config.scenario.num_v2v; ++q) {
      subbands += (q ? ";" : "") + std::to_string(res.best_action.subband(q));
      powers += (q ? ";" : "") +
                CsvWriter::format(
                    config.scenario.v2v_power_levels_dbm[res.best_action.power_idx(q)]);
      us += (q ? ";" : "") + std::to_string(res.best_action.u(q));
    }
    optimum.row({CsvWriter::format(s), CsvWriter::format(res.best_reward),
                 CsvWriter::format(static_cast<long>(index.count)), subbands, powers, us});
  }

  const std::string hist_path = opts.out_dir + "/oracle_histogram.csv";
  CsvWriter hist(hist_path, manifest.note(), {"bin_lo", "bin_hi", "count"});
  const int bins = std::max(1, opts.histogram_bins);
  const Scalar width = vmax > vmin ? (vmax - vmin) / bins : 1.0;
  std::vector<long> counts(bins, 0);
  for (const auto& vals : all_values) {
    for (Scalar v : vals) {
      int b = static_cast<int>((v - vmin) / width);
      b = std::clamp(b, 0, bins - 1);
      ++counts[b];
    }
  }
  for (int b = 0; b < bins; ++b) {
    hist.row({CsvWriter::format(vmin + b * width), CsvWriter::format(vmin + (b + 1) * width),
              CsvWriter::format(counts[b])});
  }

  manifest.outputs.push_back(opt_path);
  manifest.outputs.push_back(hist_path);
  manifest.save(opts.out_dir + "/manifest.json");
  std::cout << "oracle: " << index.count << " feasible actions, " << opts.oracle_states
            << " state(s)\n";
  return 0;
}

int cmd_extract(const CliOptions& opts) {
  fs::create_directories(opts.out_dir);

  RunManifest manifest;
  manifest.command = "extract";
  manifest.config = Config{};
  manifest.seeds = {};
  manifest.out_dir = opts.out_dir;
  manifest.version = kVersion;
  manifest.created_utc = utc_timestamp();
  manifest.params["fixtures"] = opts.fixtures_dir;

  MockBackend mock(opts.fixtures_dir);
  std::unique_ptr<RemoteBackend> remote;
  if (!opts.remote_url.empty()) remote = std::make_unique<RemoteBackend>(opts.remote_url);
  ExtractionBackend& backend = remote ? static_cast<ExtractionBackend&>(*remote) : mock;

  const std::string report_path = opts.out_dir + "/compression_report.csv";
  CsvWriter report(report_path, manifest.note(),
                   {"id", "image_bytes", "text_bytes", "ratio", "words"});
  std::vector<SemanticMessage> messages;
  for (const auto& fixture : mock.fixtures()) {
    ExtractionRequest req;
    req.image_bytes = read_file_bytes(fixture.image_path);
    const SemanticMessage msg = extract(req, backend);
    report.row({fixture.id, CsvWriter::format(static_cast<long>(msg.source_bytes)),
                CsvWriter::format(static_cast<long>(msg.text_bytes)),
                CsvWriter::format(msg.compression_ratio()), CsvWriter::format(msg.word_count)});
    messages.push_back(msg);
  }
  const CompressionReport summary = compression_report(messages);
  std::cout << "compression: mean " << summary.mean_ratio << ", min " << summary.min_ratio
            << ", max " << summary.max_ratio << " over " << summary.count << " fixtures -> "
            << (summary.pass ? "PASS" : "FAIL") << " (threshold mean <= 0.10)\n";

  manifest.outputs.push_back(report_path);
  manifest.save(opts.out_dir + "/manifest.json");
  return summary.pass ? 0 : 1;
}

}  // namespace semveh
