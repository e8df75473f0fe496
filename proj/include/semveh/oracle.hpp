#pragma once

#include <cstdint>
#include <vector>

#include "semveh/env.hpp"

namespace semveh {

/// Complete, duplicate-free enumeration of the feasible joint action space:
/// subband partial matchings x power levels^Q x u values^Q.
struct ActionSpaceIndex {
  std::vector<Action> actions;
  std::uint64_t count = 0;
};

/// Number of partial matchings of Q pairs onto W subbands (each pair at most
/// one subband, each subband at most one pair).
std::uint64_t count_partial_matchings(int num_pairs, int num_subbands);

/// Feasible-count closed form: matchings * |powers|^Q * u_max^Q.
std::uint64_t feasible_action_count(const ScenarioConfig& config);

/// Enumerates every feasible action. Refuses instances above `budget`
/// actions (default 1e7) naming the computed count.
ActionSpaceIndex enumerate_feasible(const ScenarioConfig& config, std::uint64_t budget = 10000000);

struct OracleResult {
  Action best_action;
  Scalar best_reward = 0.0;
  std::vector<Scalar> all_rewards;  // per enumerated action, enumeration order
};

/// Exhaustive argmax of the penalized reward over the frozen channel of
/// `env`; ties resolve to the earliest enumerated action.
OracleResult best_single_step(const VehicularEnv& env, const ActionSpaceIndex& index);

struct GreedyTrace {
  std::vector<Scalar> rewards;
  std::vector<Scalar> qoes;
  Scalar total_reward = 0.0;
};

/// Applies best_single_step at every step of one episode (channel frozen
/// within the episode), giving a per-step-greedy reference trajectory.
GreedyTrace greedy_episode(VehicularEnv& env, const ActionSpaceIndex& index);

}  // namespace semveh
