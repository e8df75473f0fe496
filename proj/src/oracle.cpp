#include "semveh/oracle.hpp"

#include <stdexcept>
#include <string>

namespace semveh {

std::uint64_t count_partial_matchings(int num_pairs, int num_subbands) {
  // Sum over k assigned pairs: C(Q,k) * W!/(W-k)!.
  std::uint64_t total = 0;
  const int kmax = std::min(num_pairs, num_subbands);
  for (int k = 0; k <= kmax; ++k) {
    std::uint64_t choose = 1;
    for (int i = 0; i < k; ++i) choose = choose * (num_pairs - i) / (i + 1);
    std::uint64_t perm = 1;
    for (int i = 0; i < k; ++i) perm *= static_cast<std::uint64_t>(num_subbands - i);
    total += choose * perm;
  }
  return total;
}

std::uint64_t feasible_action_count(const ScenarioConfig& config) {
  const auto Q = static_cast<std::uint64_t>(config.num_v2v);
  std::uint64_t per_pair = 1;
  for (std::uint64_t q = 0; q < Q; ++q) {
    per_pair *= static_cast<std::uint64_t>(config.v2v_power_levels_dbm.size()) *
                static_cast<std::uint64_t>(config.u_max);
  }
  return count_partial_matchings(config.num_v2v, config.num_v2i) * per_pair;
}

namespace {

// Depth-first over pairs: subband (-1 or an unused one), power level, u.
void enumerate_rec(const ScenarioConfig& cfg, int q, Action& partial, std::vector<bool>& used,
                   std::vector<Action>& out) {
  const int Q = cfg.num_v2v;
  if (q == Q) {
    out.push_back(partial);
    return;
  }
  const int n_levels = static_cast<int>(cfg.v2v_power_levels_dbm.size());
  for (int w = -1; w < cfg.num_v2i; ++w) {
    if (w >= 0 && used[w]) continue;
    if (w >= 0) used[w] = true;
    partial.subband(q) = w;
    for (int p = 0; p < n_levels; ++p) {
      partial.power_idx(q) = p;
      for (int u = 1; u <= cfg.u_max; ++u) {
        partial.u(q) = u;
        enumerate_rec(cfg, q + 1, partial, used, out);
      }
    }
    if (w >= 0) used[w] = false;
  }
}

}  // namespace

ActionSpaceIndex enumerate_feasible(const ScenarioConfig& config, std::uint64_t budget) {
  const std::uint64_t count = feasible_action_count(config);
  if (count > budget) {
    throw std::runtime_error("enumerate_feasible: " + std::to_string(count) +
                             " feasible actions exceed budget " + std::to_string(budget));
  }
  ActionSpaceIndex index;
  index.count = count;
  index.actions.reserve(count);
  Action partial;
  partial.subband.setConstant(config.num_v2v, -1);
  partial.power_idx.setZero(config.num_v2v);
  partial.u.setConstant(config.num_v2v, 1);
  std::vector<bool> used(config.num_v2i, false);
  enumerate_rec(config, 0, partial, used, index.actions);
  return index;
}

OracleResult best_single_step(const VehicularEnv& env, const ActionSpaceIndex& index) {
  OracleResult result;
  result.all_rewards.reserve(index.actions.size());
  Scalar best = -std::numeric_limits<Scalar>::infinity();
  std::size_t best_idx = 0;
  for (std::size_t i = 0; i < index.actions.size(); ++i) {
    const Scalar r = env.evaluate_action(index.actions[i]).reward;
    result.all_rewards.push_back(r);
    if (r > best) {
      best = r;
      best_idx = i;
    }
  }
  result.best_action = index.actions[best_idx];
  result.best_reward = best;
  return result;
}

GreedyTrace greedy_episode(VehicularEnv& env, const ActionSpaceIndex& index) {
  GreedyTrace trace;
  bool done = false;
  while (!done) {
    const OracleResult step_best = best_single_step(env, index);
    const StepResult res = env.step(step_best.best_action);
    trace.rewards.push_back(res.reward);
    trace.qoes.push_back(res.qoe);
    trace.total_reward += res.reward;
    done = res.done;
  }
  return trace;
}

}  // namespace semveh
