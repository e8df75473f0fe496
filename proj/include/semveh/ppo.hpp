#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "semveh/env.hpp"
#include "semveh/policy.hpp"
#include "semveh/rollout.hpp"

namespace semveh {

/// Minimal environment surface the trainer needs; lets tests train on toy
/// problems with the exact same update path.
class RolloutEnv {
 public:
  struct Outcome {
    Scalar reward = 0.0;
    Scalar qoe = 0.0;
    Vector<> state;
    bool done = false;
  };

  virtual ~RolloutEnv() = default;
  virtual Vector<> reset() = 0;
  virtual Outcome step(ConstRef<VectorInt<>> head_indices) = 0;
  virtual int state_dim() const = 0;
  virtual std::vector<int> action_head_sizes() const = 0;
};

/// Adapts VehicularEnv to the trainer: raw sampled head indices are mapped
/// to an Action and projected onto the feasible set before stepping.
class VehicularRolloutEnv : public RolloutEnv {
 public:
  VehicularRolloutEnv(const ScenarioConfig& config, Scalar penalty_lambda1,
                      Scalar penalty_lambda2, std::uint64_t seed);

  Vector<> reset() override { return env_.reset(); }
  Outcome step(ConstRef<VectorInt<>> head_indices) override;
  int state_dim() const override { return env_.state_dim(); }
  std::vector<int> action_head_sizes() const override { return env_.action_head_sizes(); }

  VehicularEnv& env() { return env_; }
  const VehicularEnv& env() const { return env_; }

 private:
  VehicularEnv env_;
  Rng tiebreak_rng_;
};

/// PPO clipped surrogate for one sample:
///   min(rho * A, clip(rho, 1 - eps, 1 + eps) * A),  rho = exp(lp_new - lp_old).
Scalar ppo_clip_objective(Scalar log_prob_new, Scalar log_prob_old, Scalar advantage,
                          Scalar epsilon);

/// Mean squared error between value predictions and targets.
Scalar critic_loss(ConstRef<Vector<>> values, ConstRef<Vector<>> targets);

struct IterationStats {
  Scalar mean_return = 0.0;  // mean episodic penalized return completed this iteration
  Scalar mean_step_qoe = 0.0;
  Scalar actor_loss = 0.0;
  Scalar critic_loss = 0.0;
  Scalar kl = 0.0;
  Scalar lr = 0.0;
  int episodes_completed = 0;
};

/// Everything that evolves across training iterations.
struct TrainerState {
  ActorCritic ac;
  AdamOptimizer adam_actor;
  AdamOptimizer adam_critic;
  Rng rollout_rng{0};
  Rng shuffle_rng{0};
  Vector<> current_state;
  bool needs_reset = true;
  Scalar episode_return_acc = 0.0;
  int iteration = 0;

  static TrainerState make(const RolloutEnv& env, const TrainConfig& cfg, std::uint64_t seed);
};

struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One on-policy iteration: collect steps_per_iteration transitions, compute
/// GAE, normalize advantages, then run clipped-PPO epochs over shuffled
/// minibatches with linearly decayed Adam steps. Throws TrainingDiverged
/// with a diagnostic snapshot if a loss or parameter goes non-finite.
IterationStats train_iteration(RolloutEnv& env, TrainerState& ts, const TrainConfig& cfg);

using PolicyFn = std::function<VectorInt<>(ConstRef<Vector<>>)>;

PolicyFn greedy_policy(const ActorCritic& ac);
/// Uniform over raw head indices; feasibility comes from env projection.
PolicyFn random_policy(const std::vector<int>& head_sizes, std::shared_ptr<Rng> rng);

struct EvalStats {
  Scalar mean_return = 0.0;        // episodic penalized return
  Scalar mean_episode_qoe = 0.0;   // episodic raw QoE
  Scalar mean_step_qoe = 0.0;      // per-step raw QoE
  Vector<> mean_steps_to_demand;   // per pair
  Vector<> unmet_fraction;         // per pair
  int episodes = 0;
};

EvalStats evaluate_policy(VehicularRolloutEnv& env, const PolicyFn& policy, int episodes);

/// Advantage normalization to zero mean / unit (population) std.
Vector<> normalize_advantages(ConstRef<Vector<>> advantages);

struct GradCheckReport {
  Scalar max_rel_error = 0.0;
  std::vector<std::pair<int, Scalar>> worst;  // flat parameter index, error
};

/// Analytic actor gradient (clipped loss + entropy bonus) vs central finite
/// differences over every actor parameter.
GradCheckReport gradient_check_actor(ActorCritic& ac, ConstRef<Matrix<>> states,
                                     const MatrixInt<>& actions, ConstRef<Matrix<>> gauss_raw,
                                     ConstRef<Vector<>> log_probs_old,
                                     ConstRef<Vector<>> advantages, Scalar clip_epsilon,
                                     Scalar entropy_coef, Scalar h = 1e-5);

GradCheckReport gradient_check_critic(ActorCritic& ac, ConstRef<Matrix<>> states,
                                      ConstRef<Vector<>> targets, Scalar h = 1e-5);

/// Scalar losses used by both the update and the finite-difference probes.
Scalar actor_loss_value(const ActorCritic& ac, ConstRef<Matrix<>> states,
                        const MatrixInt<>& actions, ConstRef<Matrix<>> gauss_raw,
                        ConstRef<Vector<>> log_probs_old, ConstRef<Vector<>> advantages,
                        Scalar clip_epsilon, Scalar entropy_coef);

}  // namespace semveh
