#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "semveh/types.hpp"

#include <nlohmann/json_fwd.hpp>

namespace semveh {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class QoeOrientation { kAsPaper, kSimilarityReward };
enum class PowerNormalization { kMinmaxDbm, kWatts };
enum class ConflictTiebreak { kLowestIndex, kRandom, kHighestGain };
enum class PathlossProfile { kUrban3gpp, kFreeSpace };

/// Radio / QoE / scenario parameterization of one experiment. Units are
/// explicit in the field names; schema keys carry the same suffixes.
struct ScenarioConfig {
  int num_vehicles = 4;   // I
  int num_v2i = 4;        // W
  int num_v2v = 4;        // Q

  Scalar carrier_freq_hz = 1.0e9;
  Scalar bs_height_m = 25.0;
  Scalar vehicle_height_m = 1.5;
  Scalar lane_width_m = 3.5;
  Scalar road_length_m = 1500.0;
  Scalar vehicle_speed_mps = 15.0;
  Scalar vehicle_spacing_m = 150.0;  // between pair groups
  Scalar pair_distance_m = 2.5;     // within a V2V pair

  Scalar v2i_power_dbm = 23.0;
  std::vector<Scalar> v2v_power_levels_dbm = {-100.0, 5.0, 15.0, 23.0};
  Scalar p_min_dbm = -100.0;
  Scalar p_max_dbm = 23.0;
  Scalar noise_a_dbm = -114.0;
  Scalar noise_b_dbm = -114.0;
  Scalar shadow_sigma_v2i_db = 3.0;
  Scalar shadow_sigma_v2v_db = 8.0;

  Scalar xi_threshold = 0.3;
  Scalar sinr_threshold_db = 10.0;
  int u_max = 5;

  Scalar demand_words = 800.0;
  Scalar step_duration_s = 1.0e-3;
  int episode_steps = 100;
  Scalar bandwidth_per_subband_hz = 180.0e3;
  Scalar bits_per_semantic_symbol = 8.0;

  QoeOrientation qoe_orientation = QoeOrientation::kSimilarityReward;
  PowerNormalization theta_b_power_normalization = PowerNormalization::kMinmaxDbm;
  ConflictTiebreak conflict_tiebreak = ConflictTiebreak::kLowestIndex;
  PathlossProfile pathloss_profile = PathlossProfile::kUrban3gpp;
  bool extended_state = false;

  std::uint64_t seed = 1;

  void validate() const;
};

struct TrainConfig {
  Scalar discount = 0.99;        // gamma
  Scalar gae_lambda = 0.95;
  Scalar clip_epsilon = 0.5;
  Scalar lr_initial = 1.0e-4;
  Scalar lr_final = 1.0e-8;
  int iterations = 60;
  int steps_per_iteration = 512;
  int minibatch_size = 128;
  int epochs_per_update = 4;
  Scalar penalty_lambda1 = 1.0;
  Scalar penalty_lambda2 = 1.0;
  Scalar entropy_coef = 0.01;
  Scalar value_coef = 0.5;
  Scalar max_grad_norm = 0.5;
  std::vector<int> hidden_sizes = {512, 512, 512};
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string policy_head = "categorical";  // or "gaussian"
  std::string value_target = "gae";         // or "one_step"
  int checkpoint_every = 0;                 // 0: only final checkpoint
  int eval_episodes = 20;

  void validate() const;
};

struct Config {
  ScenarioConfig scenario;
  TrainConfig train;

  void validate() const {
    scenario.validate();
    train.validate();
  }
};

/// Parses a TOML-subset document (tables one level deep, scalar and array
/// values, # comments) into a JSON object. Throws ConfigError with the
/// offending line on malformed input.
nlohmann::json parse_toml_subset(const std::string& text);

/// Loads a config from a .toml or .json file. Missing fields keep their
/// defaults; unknown fields and invariant violations raise ConfigError
/// naming the field.
Config load_config(const std::string& path);

Config config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const Config& config);

/// Applies a dotted-path override such as "scenario.u_max=5".
void apply_override(nlohmann::json& j, const std::string& dotted_assignment);

/// FNV-1a hash of the canonical JSON serialization.
std::uint64_t config_hash(const Config& config);

std::uint64_t fnv1a(const void* data, std::size_t size);

}  // namespace semveh
