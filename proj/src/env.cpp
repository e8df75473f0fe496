#include "semveh/env.hpp"

#include <algorithm>
#include <stdexcept>

#include "semveh/units.hpp"

namespace semveh {

namespace {

// State normalization: gains around [-150, -50] dB, SINRs around [-50, 50].
Scalar norm_gain_db(Scalar g_db) { return std::clamp((g_db + 100.0) / 50.0, -1.0, 1.0); }
Scalar norm_sinr_db(Scalar s_db) { return std::clamp(s_db / 50.0, -1.0, 1.0); }

}  // namespace

Action project_action(const Action& raw, const ScenarioConfig& config) {
  return project_action(raw, config, nullptr, nullptr);
}

Action project_action(const Action& raw, const ScenarioConfig& config, const ChannelState* ch,
                      Rng* rng) {
  const int Q = config.num_v2v;
  const int W = config.num_v2i;
  const int n_levels = static_cast<int>(config.v2v_power_levels_dbm.size());
  Action a = raw;
  for (int q = 0; q < Q; ++q) {
    a.subband(q) = std::clamp(a.subband(q), -1, W - 1);
    a.power_idx(q) = std::clamp(a.power_idx(q), 0, n_levels - 1);
    a.u(q) = std::clamp(a.u(q), 1, config.u_max);
  }
  for (int w = 0; w < W; ++w) {
    std::vector<int> claimants;
    for (int q = 0; q < Q; ++q) {
      if (a.subband(q) == w) claimants.push_back(q);
    }
    if (claimants.size() <= 1) continue;
    int keeper = claimants.front();
    switch (config.conflict_tiebreak) {
      case ConflictTiebreak::kLowestIndex:
        break;
      case ConflictTiebreak::kRandom:
        if (rng != nullptr) keeper = claimants[rng->uniform_int(static_cast<int>(claimants.size()))];
        break;
      case ConflictTiebreak::kHighestGain:
        if (ch != nullptr) {
          Scalar best = -1.0;
          for (int q : claimants) {
            if (ch->h_v2v_own(q, w) > best) {
              best = ch->h_v2v_own(q, w);
              keeper = q;
            }
          }
        }
        break;
    }
    for (int q : claimants) {
      if (q != keeper) a.subband(q) = -1;
    }
  }
  return a;
}

bool is_feasible(const Action& action, const ScenarioConfig& config) {
  const int Q = config.num_v2v;
  const int W = config.num_v2i;
  const int n_levels = static_cast<int>(config.v2v_power_levels_dbm.size());
  if (action.subband.size() != Q || action.power_idx.size() != Q || action.u.size() != Q) {
    return false;
  }
  std::vector<int> users(W, 0);
  for (int q = 0; q < Q; ++q) {
    if (action.subband(q) < -1 || action.subband(q) >= W) return false;
    if (action.power_idx(q) < 0 || action.power_idx(q) >= n_levels) return false;
    if (action.u(q) < 1 || action.u(q) > config.u_max) return false;
    if (action.subband(q) >= 0 && ++users[action.subband(q)] > 1) return false;
  }
  return true;
}

EpisodeMetrics episode_metrics(const DemandTracker& tracker, int episode_len) {
  const int Q = static_cast<int>(tracker.remaining_words.size());
  EpisodeMetrics m;
  m.steps_to_fulfillment.resize(Q);
  m.unmet.resize(Q);
  for (int q = 0; q < Q; ++q) {
    if (tracker.fulfillment_step(q) >= 0) {
      m.steps_to_fulfillment(q) = tracker.fulfillment_step(q);
      m.unmet[q] = false;
    } else {
      m.steps_to_fulfillment(q) = episode_len;
      m.unmet[q] = true;
    }
  }
  m.cumulative_qoe = 0.0;
  for (Scalar v : tracker.qoe_history) m.cumulative_qoe += v;
  m.mean_similarity = tracker.xi_count > 0 ? tracker.xi_sum / tracker.xi_count : 0.0;
  return m;
}

VehicularEnv::VehicularEnv(const ScenarioConfig& config, Scalar penalty_lambda1,
                           Scalar penalty_lambda2, std::uint64_t seed)
    : config_(config),
      similarity_model_(SimilarityModel::parametric()),
      qoe_params_(QoeParams::from(config)),
      lambda1_(penalty_lambda1),
      lambda2_(penalty_lambda2),
      rng_(seed) {
  config_.validate();
  reset();
}

int VehicularEnv::state_dim() const {
  const int base = 2 * config_.num_v2i + config_.num_v2v;
  return config_.extended_state ? base + 2 * config_.num_v2v : base;
}

std::vector<int> VehicularEnv::action_head_sizes() const {
  std::vector<int> sizes;
  const int Q = config_.num_v2v;
  for (int q = 0; q < Q; ++q) sizes.push_back(config_.num_v2i + 1);
  for (int q = 0; q < Q; ++q) sizes.push_back(static_cast<int>(config_.v2v_power_levels_dbm.size()));
  for (int q = 0; q < Q; ++q) sizes.push_back(config_.u_max);
  return sizes;
}

Action VehicularEnv::action_from_indices(ConstRef<VectorInt<>> head_indices) const {
  const int Q = config_.num_v2v;
  Action a;
  a.subband.resize(Q);
  a.power_idx.resize(Q);
  a.u.resize(Q);
  for (int q = 0; q < Q; ++q) {
    a.subband(q) = head_indices(q) - 1;  // head index 0 means silent
    a.power_idx(q) = head_indices(Q + q);
    a.u(q) = head_indices(2 * Q + q) + 1;
  }
  return a;
}

VectorInt<> VehicularEnv::indices_from_action(const Action& action) const {
  const int Q = config_.num_v2v;
  VectorInt<> idx(3 * Q);
  for (int q = 0; q < Q; ++q) {
    idx(q) = action.subband(q) + 1;
    idx(Q + q) = action.power_idx(q);
    idx(2 * Q + q) = action.u(q) - 1;
  }
  return idx;
}

Action VehicularEnv::random_feasible_action(Rng& rng) const {
  const int Q = config_.num_v2v;
  Action a;
  a.subband.resize(Q);
  a.power_idx.resize(Q);
  a.u.resize(Q);
  for (int q = 0; q < Q; ++q) {
    a.subband(q) = rng.uniform_int(config_.num_v2i + 1) - 1;
    a.power_idx(q) = rng.uniform_int(static_cast<int>(config_.v2v_power_levels_dbm.size()));
    a.u(q) = 1 + rng.uniform_int(config_.u_max);
  }
  return project_action(a, config_, &channel_, &rng);
}

Vector<> VehicularEnv::power_dbm_of(const Action& action) const {
  const int Q = config_.num_v2v;
  Vector<> p(Q);
  for (int q = 0; q < Q; ++q) p(q) = config_.v2v_power_levels_dbm[action.power_idx(q)];
  return p;
}

Vector<> VehicularEnv::reset() {
  topology_ = make_topology(config_, rng_);
  shadow_ = sample_shadowing(config_, rng_);
  channel_ = sample_gains(topology_, config_, shadow_, rng_);
  step_index_ = 0;

  const int W = config_.num_v2i;
  const int Q = config_.num_v2v;
  // Before any transmission the observed V2I SINR is the interference-free
  // value; V2V SINR entries carry the -1 sentinel.
  prev_sinr_v2i_db_.resize(W);
  const VectorInt<> silent = VectorInt<>::Constant(Q, -1);
  const Vector<> zero_power = Vector<>::Constant(Q, config_.p_min_dbm);
  for (int w = 0; w < W; ++w) {
    prev_sinr_v2i_db_(w) = linear_to_db(sinr_v2i(w, config_, silent, zero_power, channel_));
  }
  prev_sinr_v2v_norm_ = Vector<>::Constant(Q, -1.0);

  demand_ = DemandTracker{};
  demand_.remaining_words = Vector<>::Constant(Q, config_.demand_words);
  demand_.initial_words = demand_.remaining_words;
  demand_.fulfillment_step = VectorInt<>::Constant(Q, config_.demand_words > 0.0 ? -1 : 0);

  return encode_state();
}

Vector<> VehicularEnv::encode_state() const {
  const int W = config_.num_v2i;
  const int Q = config_.num_v2v;
  Vector<> s(state_dim());
  for (int w = 0; w < W; ++w) s(w) = norm_gain_db(linear_to_db(channel_.h_v2i_bs(w)));
  for (int w = 0; w < W; ++w) s(W + w) = norm_sinr_db(prev_sinr_v2i_db_(w));
  for (int q = 0; q < Q; ++q) s(2 * W + q) = prev_sinr_v2v_norm_(q);
  if (config_.extended_state) {
    for (int q = 0; q < Q; ++q) {
      const Scalar init = demand_.initial_words(q);
      s(2 * W + Q + q) = init > 0.0 ? demand_.remaining_words(q) / init : 0.0;
    }
    const Scalar time_frac =
        static_cast<Scalar>(config_.episode_steps - step_index_) / config_.episode_steps;
    for (int q = 0; q < Q; ++q) s(2 * W + 2 * Q + q) = time_frac;
  }
  return s;
}

ActionEval VehicularEnv::evaluate_action(const Action& action) const {
  const int W = config_.num_v2i;
  const int Q = config_.num_v2v;

  // A pair whose payload demand is already met has nothing left to send:
  // it goes silent regardless of the requested subband.
  Action effective = action;
  for (int q = 0; q < Q; ++q) {
    if (demand_.remaining_words(q) <= 0.0) effective.subband(q) = -1;
  }
  const Vector<> power_dbm = power_dbm_of(effective);

  ActionEval ev;
  ev.xi = Vector<>::Zero(Q);
  ev.sinr_v2v_db = Vector<>::Zero(Q);
  ev.sinr_v2i_db.resize(W);
  ev.delivered_words = Vector<>::Zero(Q);

  for (int w = 0; w < W; ++w) {
    ev.sinr_v2i_db(w) =
        linear_to_db(sinr_v2i(w, config_, effective.subband, power_dbm, channel_));
  }

  Scalar penalty1 = 0.0;
  Scalar penalty2 = 0.0;
  for (int q = 0; q < Q; ++q) {
    const int w = effective.subband(q);
    if (w < 0) continue;
    const Scalar gamma = sinr_v2v(q, w, config_, action.subband, power_dbm, channel_);
    const Scalar gamma_db = linear_to_db(gamma);
    ev.sinr_v2v_db(q) = gamma_db;
    ev.xi(q) = similarity(similarity_model_, static_cast<Scalar>(action.u(q)), gamma_db);
    penalty1 += std::max(0.0, config_.xi_threshold - ev.xi(q));
    penalty2 += std::max(0.0, config_.sinr_threshold_db - gamma_db);
    ev.delivered_words(q) = config_.bandwidth_per_subband_hz * std::log2(1.0 + gamma) *
                            config_.step_duration_s /
                            (action.u(q) * config_.bits_per_semantic_symbol);
  }

  ev.qoe = qoe(action.subband, power_dbm, ev.xi, qoe_params_);
  ev.reward = ev.qoe - lambda1_ * penalty1 - lambda2_ * penalty2;
  return ev;
}

StepResult VehicularEnv::step(const Action& action) {
  if (!is_feasible(action, config_)) {
    throw std::invalid_argument("VehicularEnv::step: infeasible action (project first)");
  }

  StepResult result;
  result.diag = evaluate_action(action);
  result.reward = result.diag.reward;
  result.qoe = result.diag.qoe;

  // Demand bookkeeping.
  ++step_index_;
  const int Q = config_.num_v2v;
  for (int q = 0; q < Q; ++q) {
    if (result.diag.delivered_words(q) > 0.0 && demand_.remaining_words(q) > 0.0) {
      demand_.remaining_words(q) =
          std::max(0.0, demand_.remaining_words(q) - result.diag.delivered_words(q));
      if (demand_.remaining_words(q) == 0.0 && demand_.fulfillment_step(q) < 0) {
        demand_.fulfillment_step(q) = step_index_;
      }
    }
  }
  demand_.delivered_history.push_back(result.diag.delivered_words);
  demand_.qoe_history.push_back(result.qoe);
  for (int q = 0; q < Q; ++q) {
    if (action.subband(q) >= 0) {
      demand_.xi_sum += result.diag.xi(q);
      ++demand_.xi_count;
    }
  }

  // Observation bookkeeping, then advance the channel.
  prev_sinr_v2i_db_ = result.diag.sinr_v2i_db;
  for (int q = 0; q < Q; ++q) {
    prev_sinr_v2v_norm_(q) =
        action.subband(q) >= 0 ? norm_sinr_db(result.diag.sinr_v2v_db(q)) : -1.0;
  }
  if (!channel_frozen_) {
    topology_ = update_mobility(topology_, config_.step_duration_s, rng_);
    channel_ = sample_gains(topology_, config_, shadow_, rng_);
  }

  result.done = step_index_ >= config_.episode_steps ||
                (demand_.remaining_words.array() <= 0.0).all();
  result.state = encode_state();
  return result;
}

}  // namespace semveh
