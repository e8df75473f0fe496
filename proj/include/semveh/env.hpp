#pragma once

#include <vector>

#include "semveh/channel.hpp"
#include "semveh/config.hpp"
#include "semveh/semantics.hpp"
#include "semveh/types.hpp"

namespace semveh {

/// Joint decision for all V2V pairs: subband (-1 = stay silent), transmit
/// power level index, and semantic symbols per word.
struct Action {
  VectorInt<> subband;    // per pair, -1 or [0, W)
  VectorInt<> power_idx;  // per pair, index into v2v_power_levels_dbm
  VectorInt<> u;          // per pair, value in [1, u_max]

  bool operator==(const Action& other) const {
    return subband == other.subband && power_idx == other.power_idx && u == other.u;
  }
};

/// Clamps indices into range and resolves subband conflicts so that each
/// subband keeps at most one pair (Problem constraints 16b-16f). The default
/// tiebreak keeps the lowest pair index; projection is idempotent.
Action project_action(const Action& raw, const ScenarioConfig& config);

/// Variant honoring the configured tiebreak; `ch`/`rng` are only consulted
/// for the highest_gain / random modes.
Action project_action(const Action& raw, const ScenarioConfig& config, const ChannelState* ch,
                      Rng* rng);

bool is_feasible(const Action& action, const ScenarioConfig& config);

/// Reward and per-pair diagnostics of one action on a frozen channel.
struct ActionEval {
  Scalar reward = 0.0;   // penalized reward r~
  Scalar qoe = 0.0;      // raw QoE r
  Vector<> xi;           // per pair; 0 for silent pairs
  Vector<> sinr_v2v_db;  // per pair; meaningful only where active
  Vector<> sinr_v2i_db;  // per subband
  Vector<> delivered_words;  // per pair
};

struct StepResult {
  Scalar reward = 0.0;
  Scalar qoe = 0.0;
  Vector<> state;
  bool done = false;
  ActionEval diag;
};

struct DemandTracker {
  Vector<> remaining_words;
  Vector<> initial_words;
  VectorInt<> fulfillment_step;          // -1 while unmet
  std::vector<Vector<>> delivered_history;  // per step, per pair
  std::vector<Scalar> qoe_history;
  Scalar xi_sum = 0.0;
  long xi_count = 0;
};

struct EpisodeMetrics {
  VectorInt<> steps_to_fulfillment;  // episode length where unmet
  std::vector<bool> unmet;
  Scalar cumulative_qoe = 0.0;
  Scalar mean_similarity = 0.0;
};

EpisodeMetrics episode_metrics(const DemandTracker& tracker, int episode_len);

/// The spectrum-sharing MDP: state exposes current V2I gains plus the
/// previous step's SINRs (dimension 2W + Q, plus 2Q demand/time extras when
/// enabled); step() rewards the action against the current channel, then
/// advances mobility and fading.
class VehicularEnv {
 public:
  VehicularEnv(const ScenarioConfig& config, Scalar penalty_lambda1, Scalar penalty_lambda2,
               std::uint64_t seed);

  Vector<> reset();
  StepResult step(const Action& action);

  /// Pure reward of `action` on the current channel; no state mutation.
  /// Shared by step() and the exhaustive oracle.
  ActionEval evaluate_action(const Action& action) const;

  int state_dim() const;
  /// Per-head categorical sizes, ordered [subband x Q, power x Q, u x Q].
  std::vector<int> action_head_sizes() const;
  Action action_from_indices(ConstRef<VectorInt<>> head_indices) const;
  VectorInt<> indices_from_action(const Action& action) const;
  Action random_feasible_action(Rng& rng) const;

  /// When frozen, step() keeps the channel state (no mobility/fading
  /// resample); reset() still draws a fresh one.
  void set_channel_frozen(bool frozen) { channel_frozen_ = frozen; }

  const ScenarioConfig& config() const { return config_; }
  const DemandTracker& demand() const { return demand_; }
  const ChannelState& channel() const { return channel_; }
  const Topology& topology() const { return topology_; }
  int step_index() const { return step_index_; }

 private:
  Vector<> encode_state() const;
  Vector<> power_dbm_of(const Action& action) const;

  ScenarioConfig config_;
  SimilarityModel similarity_model_;
  QoeParams qoe_params_;
  Scalar lambda1_;
  Scalar lambda2_;
  Rng rng_;

  Topology topology_;
  ShadowField shadow_;
  ChannelState channel_;
  Vector<> prev_sinr_v2i_db_;
  Vector<> prev_sinr_v2v_norm_;  // already normalized; -1 sentinel before any step
  DemandTracker demand_;
  int step_index_ = 0;
  bool channel_frozen_ = false;
};

}  // namespace semveh
