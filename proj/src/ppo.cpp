#include "semveh/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

namespace semveh {

VehicularRolloutEnv::VehicularRolloutEnv(const ScenarioConfig& config, Scalar penalty_lambda1,
                                         Scalar penalty_lambda2, std::uint64_t seed)
    : env_(config, penalty_lambda1, penalty_lambda2, seed),
      tiebreak_rng_(splitmix64(seed ^ 0x7ea5ULL)) {}

RolloutEnv::Outcome VehicularRolloutEnv::step(ConstRef<VectorInt<>> head_indices) {
  Action raw = env_.action_from_indices(head_indices);
  const Action projected =
      project_action(raw, env_.config(), &env_.channel(), &tiebreak_rng_);
  StepResult res = env_.step(projected);
  return {res.reward, res.qoe, res.state, res.done};
}

Scalar ppo_clip_objective(Scalar log_prob_new, Scalar log_prob_old, Scalar advantage,
                          Scalar epsilon) {
  const Scalar ratio = std::exp(log_prob_new - log_prob_old);
  const Scalar clipped = std::clamp(ratio, 1.0 - epsilon, 1.0 + epsilon);
  return std::min(ratio * advantage, clipped * advantage);
}

Scalar critic_loss(ConstRef<Vector<>> values, ConstRef<Vector<>> targets) {
  if (values.size() != targets.size()) {
    throw std::invalid_argument("critic_loss: length mismatch");
  }
  return (values - targets).array().square().mean();
}

Vector<> normalize_advantages(ConstRef<Vector<>> advantages) {
  const Scalar mean = advantages.mean();
  const Scalar var = (advantages.array() - mean).square().mean();
  return (advantages.array() - mean) / (std::sqrt(var) + 1e-8);
}

TrainerState TrainerState::make(const RolloutEnv& env, const TrainConfig& cfg,
                                std::uint64_t seed) {
  TrainerState ts;
  Rng init_rng(splitmix64(seed ^ 0x1417ULL));
  ts.ac = ActorCritic(env.state_dim(), cfg.hidden_sizes, env.action_head_sizes(),
                      cfg.policy_head, init_rng);
  ts.adam_actor = AdamOptimizer(ts.ac.actor);
  ts.adam_critic = AdamOptimizer(ts.ac.critic);
  ts.rollout_rng = Rng(splitmix64(seed ^ 0xabcdULL));
  ts.shuffle_rng = Rng(splitmix64(seed ^ 0x5eedULL));
  return ts;
}

namespace {

void shuffle_indices(std::vector<int>& idx, Rng& rng) {
  for (int i = static_cast<int>(idx.size()) - 1; i > 0; --i) {
    std::swap(idx[i], idx[rng.uniform_int(i + 1)]);
  }
}

std::string diverged_snapshot(int iteration, Scalar actor_loss, Scalar value_loss,
                              Scalar mean_reward) {
  std::ostringstream os;
  os << "training diverged: non-finite quantity at iteration " << iteration
     << " (actor_loss=" << actor_loss << ", critic_loss=" << value_loss
     << ", mean_reward=" << mean_reward << ")";
  return os.str();
}

}  // namespace

IterationStats train_iteration(RolloutEnv& env, TrainerState& ts, const TrainConfig& cfg) {
  const std::vector<int> head_sizes = env.action_head_sizes();
  const int num_heads = static_cast<int>(head_sizes.size());
  const bool gaussian = ts.ac.gaussian();
  RolloutBuffer buffer(cfg.steps_per_iteration, env.state_dim(), num_heads, gaussian);

  if (ts.needs_reset) {
    ts.current_state = env.reset();
    ts.needs_reset = false;
    ts.episode_return_acc = 0.0;
  }

  // -- collect experience --
  std::vector<Scalar> completed_returns;
  Scalar qoe_sum = 0.0;
  const Vector<> no_gauss;
  while (!buffer.full()) {
    const PolicySample sample = ts.ac.sample(ts.current_state, ts.rollout_rng);
    const Scalar value = ts.ac.value(ts.current_state);
    const RolloutEnv::Outcome out = env.step(sample.indices);
    buffer.push(ts.current_state, sample.indices, gaussian ? sample.gauss_raw : no_gauss,
                sample.log_prob, out.reward, value, out.done);
    ts.episode_return_acc += out.reward;
    qoe_sum += out.qoe;
    if (out.done) {
      completed_returns.push_back(ts.episode_return_acc);
      ts.episode_return_acc = 0.0;
      ts.current_state = env.reset();
    } else {
      ts.current_state = out.state;
    }
  }
  const Scalar bootstrap = ts.ac.value(ts.current_state);

  // -- advantages and value targets --
  const int T = buffer.size();
  Vector<> values_ext(T + 1);
  values_ext.head(T) = buffer.values;
  values_ext(T) = bootstrap;
  auto [advantages, targets] =
      gae_advantages(buffer.rewards, values_ext, buffer.dones, cfg.discount, cfg.gae_lambda);
  if (cfg.value_target == "one_step") {
    for (int t = 0; t < T; ++t) {
      const Scalar nonterminal = buffer.dones[t] ? 0.0 : 1.0;
      targets(t) = buffer.rewards(t) + cfg.discount * values_ext(t + 1) * nonterminal;
    }
  }
  advantages = normalize_advantages(advantages);

  // -- clipped-PPO epochs --
  const Scalar lr = lr_schedule(cfg.lr_initial, cfg.lr_final, ts.iteration, cfg.iterations);
  std::vector<int> order(T);
  std::iota(order.begin(), order.end(), 0);

  Scalar last_actor_loss = 0.0;
  Scalar last_critic_loss = 0.0;
  Scalar kl_acc = 0.0;
  int kl_batches = 0;

  MlpGrads actor_grads = ts.ac.actor.zero_grads();
  MlpGrads critic_grads = ts.ac.critic.zero_grads();

  for (int epoch = 0; epoch < cfg.epochs_per_update; ++epoch) {
    shuffle_indices(order, ts.shuffle_rng);
    for (int start = 0; start < T; start += cfg.minibatch_size) {
      const int n = std::min(cfg.minibatch_size, T - start);
      Matrix<> mb_states(n, env.state_dim());
      MatrixInt<> mb_actions(n, num_heads);
      Matrix<> mb_gauss = gaussian ? Matrix<>(n, num_heads) : Matrix<>(0, 0);
      Vector<> mb_logp_old(n), mb_adv(n), mb_targets(n);
      for (int i = 0; i < n; ++i) {
        const int src = order[start + i];
        mb_states.row(i) = buffer.states.row(src);
        mb_actions.row(i) = buffer.actions.row(src);
        if (gaussian) mb_gauss.row(i) = buffer.gauss_raw.row(src);
        mb_logp_old(i) = buffer.log_probs(src);
        mb_adv(i) = advantages(src);
        mb_targets(i) = targets(src);
      }

      // actor
      Vector<> logp_new, entropies;
      Matrix<> logits;
      MlpCache actor_cache;
      ts.ac.evaluate_actions(mb_states, mb_actions, mb_gauss, logp_new, entropies, logits,
                             actor_cache);
      const Matrix<> dlogits = ts.ac.actor_logits_grad(
          logits, mb_actions, mb_gauss, mb_logp_old, mb_adv, cfg.clip_epsilon, cfg.entropy_coef);
      actor_grads.setZero();
      ts.ac.actor.backward(actor_cache, dlogits, actor_grads);
      clip_grad_norm(actor_grads, cfg.max_grad_norm);
      ts.adam_actor.step(ts.ac.actor, actor_grads, lr);

      Scalar obj = 0.0;
      for (int i = 0; i < n; ++i) {
        obj += ppo_clip_objective(logp_new(i), mb_logp_old(i), mb_adv(i), cfg.clip_epsilon);
        const Scalar logratio = logp_new(i) - mb_logp_old(i);
        kl_acc += std::exp(logratio) - 1.0 - logratio;
      }
      kl_batches += n;
      last_actor_loss = -obj / n - cfg.entropy_coef * entropies.mean();

      // critic
      MlpCache critic_cache;
      const Matrix<> v_out = ts.ac.critic.forward(mb_states, critic_cache);
      const Vector<> v = v_out.col(0);
      last_critic_loss = critic_loss(v, mb_targets);
      Matrix<> dv = (2.0 / n) * (v - mb_targets);
      critic_grads.setZero();
      ts.ac.critic.backward(critic_cache, dv, critic_grads);
      clip_grad_norm(critic_grads, cfg.max_grad_norm);
      ts.adam_critic.step(ts.ac.critic, critic_grads, lr);
    }
  }

  const Scalar mean_reward = buffer.rewards.mean();
  if (!std::isfinite(last_actor_loss) || !std::isfinite(last_critic_loss) ||
      !ts.ac.actor.all_finite() || !ts.ac.critic.all_finite()) {
    throw TrainingDiverged(
        diverged_snapshot(ts.iteration, last_actor_loss, last_critic_loss, mean_reward));
  }

  IterationStats stats;
  stats.episodes_completed = static_cast<int>(completed_returns.size());
  stats.mean_return =
      completed_returns.empty()
          ? ts.episode_return_acc
          : std::accumulate(completed_returns.begin(), completed_returns.end(), 0.0) /
                completed_returns.size();
  stats.mean_step_qoe = qoe_sum / T;
  stats.actor_loss = last_actor_loss;
  stats.critic_loss = last_critic_loss;
  stats.kl = kl_batches > 0 ? kl_acc / kl_batches : 0.0;
  stats.lr = lr;
  ++ts.iteration;
  return stats;
}

PolicyFn greedy_policy(const ActorCritic& ac) {
  return [&ac](ConstRef<Vector<>> state) { return ac.greedy(state).indices; };
}

PolicyFn random_policy(const std::vector<int>& head_sizes, std::shared_ptr<Rng> rng) {
  return [head_sizes, rng](ConstRef<Vector<>> state) {
    (void)state;
    VectorInt<> idx(static_cast<Index>(head_sizes.size()));
    for (std::size_t h = 0; h < head_sizes.size(); ++h) {
      idx(static_cast<Index>(h)) = rng->uniform_int(head_sizes[h]);
    }
    return idx;
  };
}

EvalStats evaluate_policy(VehicularRolloutEnv& env, const PolicyFn& policy, int episodes) {
  const int Q = env.env().config().num_v2v;
  EvalStats stats;
  stats.episodes = episodes;
  stats.mean_steps_to_demand = Vector<>::Zero(Q);
  stats.unmet_fraction = Vector<>::Zero(Q);
  long steps_total = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    Vector<> state = env.reset();
    bool done = false;
    Scalar ep_return = 0.0;
    Scalar ep_qoe = 0.0;
    int len = 0;
    while (!done) {
      const RolloutEnv::Outcome out = env.step(policy(state));
      ep_return += out.reward;
      ep_qoe += out.qoe;
      state = out.state;
      done = out.done;
      ++len;
    }
    const EpisodeMetrics em = episode_metrics(env.env().demand(), len);
    for (int q = 0; q < Q; ++q) {
      stats.mean_steps_to_demand(q) += em.steps_to_fulfillment(q);
      if (em.unmet[q]) stats.unmet_fraction(q) += 1.0;
    }
    stats.mean_return += ep_return;
    stats.mean_episode_qoe += ep_qoe;
    steps_total += len;
  }
  stats.mean_return /= episodes;
  stats.mean_episode_qoe /= episodes;
  stats.mean_step_qoe = steps_total > 0 ? stats.mean_episode_qoe * episodes / steps_total : 0.0;
  stats.mean_steps_to_demand /= static_cast<Scalar>(episodes);
  stats.unmet_fraction /= static_cast<Scalar>(episodes);
  return stats;
}

Scalar actor_loss_value(const ActorCritic& ac, ConstRef<Matrix<>> states,
                        const MatrixInt<>& actions, ConstRef<Matrix<>> gauss_raw,
                        ConstRef<Vector<>> log_probs_old, ConstRef<Vector<>> advantages,
                        Scalar clip_epsilon, Scalar entropy_coef) {
  Vector<> logp_new, entropies;
  Matrix<> logits;
  MlpCache cache;
  ac.evaluate_actions(states, actions, gauss_raw, logp_new, entropies, logits, cache);
  Scalar obj = 0.0;
  for (Index i = 0; i < states.rows(); ++i) {
    obj += ppo_clip_objective(logp_new(i), log_probs_old(i), advantages(i), clip_epsilon);
  }
  return -obj / states.rows() - entropy_coef * entropies.mean();
}

namespace {

GradCheckReport finite_difference_check(Mlp& model, const std::function<Scalar()>& loss,
                                        ConstRef<Vector<>> analytic, Scalar h) {
  Vector<> params = model.flatten();
  GradCheckReport report;
  std::vector<std::pair<Scalar, int>> errors;
  for (Index k = 0; k < params.size(); ++k) {
    const Scalar saved = params(k);
    params(k) = saved + h;
    model.unflatten(params);
    const Scalar lp = loss();
    params(k) = saved - h;
    model.unflatten(params);
    const Scalar lm = loss();
    params(k) = saved;
    model.unflatten(params);
    const Scalar numeric = (lp - lm) / (2.0 * h);
    const Scalar denom = std::max(std::abs(analytic(k)) + std::abs(numeric), 1e-4);
    const Scalar rel = std::abs(analytic(k) - numeric) / denom;
    errors.push_back({rel, static_cast<int>(k)});
    report.max_rel_error = std::max(report.max_rel_error, rel);
  }
  std::sort(errors.rbegin(), errors.rend());
  for (std::size_t i = 0; i < std::min<std::size_t>(5, errors.size()); ++i) {
    report.worst.push_back({errors[i].second, errors[i].first});
  }
  return report;
}

}  // namespace

GradCheckReport gradient_check_actor(ActorCritic& ac, ConstRef<Matrix<>> states,
                                     const MatrixInt<>& actions, ConstRef<Matrix<>> gauss_raw,
                                     ConstRef<Vector<>> log_probs_old,
                                     ConstRef<Vector<>> advantages, Scalar clip_epsilon,
                                     Scalar entropy_coef, Scalar h) {
  Vector<> logp_new, entropies;
  Matrix<> logits;
  MlpCache cache;
  ac.evaluate_actions(states, actions, gauss_raw, logp_new, entropies, logits, cache);
  const Matrix<> dlogits = ac.actor_logits_grad(logits, actions, gauss_raw, log_probs_old,
                                                advantages, clip_epsilon, entropy_coef);
  MlpGrads grads = ac.actor.zero_grads();
  ac.actor.backward(cache, dlogits, grads);
  const Vector<> analytic = Mlp::flatten_grads(grads);

  auto loss = [&]() {
    return actor_loss_value(ac, states, actions, gauss_raw, log_probs_old, advantages,
                            clip_epsilon, entropy_coef);
  };
  return finite_difference_check(ac.actor, loss, analytic, h);
}

GradCheckReport gradient_check_critic(ActorCritic& ac, ConstRef<Matrix<>> states,
                                      ConstRef<Vector<>> targets, Scalar h) {
  MlpCache cache;
  const Matrix<> v_out = ac.critic.forward(states, cache);
  const Vector<> v = v_out.col(0);
  Matrix<> dv = (2.0 / states.rows()) * (v - targets);
  MlpGrads grads = ac.critic.zero_grads();
  ac.critic.backward(cache, dv, grads);
  const Vector<> analytic = Mlp::flatten_grads(grads);

  auto loss = [&]() {
    const Vector<> vals = ac.critic.forward(states).col(0);
    return critic_loss(vals, targets);
  };
  return finite_difference_check(ac.critic, loss, analytic, h);
}

}  // namespace semveh
