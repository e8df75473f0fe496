#include "semveh/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace semveh {

namespace {

using nlohmann::json;

std::string trim(const std::string& s) {
  auto b = s.find_first_not_of(" \t\r");
  auto e = s.find_last_not_of(" \t\r");
  if (b == std::string::npos) return "";
  return s.substr(b, e - b + 1);
}

// Strips a trailing comment that is not inside a string literal.
std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"') in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

json parse_toml_scalar(const std::string& raw, int line_no) {
  const std::string v = trim(raw);
  if (v.empty()) throw ConfigError("toml parse error at line " + std::to_string(line_no) + ": empty value");
  if (v.front() == '"') {
    if (v.size() < 2 || v.back() != '"') {
      throw ConfigError("toml parse error at line " + std::to_string(line_no) + ": unterminated string");
    }
    return json(v.substr(1, v.size() - 2));
  }
  if (v == "true") return json(true);
  if (v == "false") return json(false);
  const bool is_float = v.find_first_of(".eE") != std::string::npos &&
                        v.find_first_not_of("+-0123456789.eE") == std::string::npos;
  try {
    std::size_t pos = 0;
    if (is_float) {
      const double d = std::stod(v, &pos);
      if (pos != v.size()) throw std::invalid_argument(v);
      return json(d);
    }
    const long long i = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return json(i);
  } catch (const std::exception&) {
    throw ConfigError("toml parse error at line " + std::to_string(line_no) + ": bad value '" + v + "'");
  }
}

json parse_toml_value(const std::string& raw, int line_no) {
  const std::string v = trim(raw);
  if (!v.empty() && v.front() == '[') {
    if (v.back() != ']') {
      throw ConfigError("toml parse error at line " + std::to_string(line_no) + ": unterminated array");
    }
    json arr = json::array();
    std::string inner = v.substr(1, v.size() - 2);
    std::string item;
    bool in_string = false;
    for (char c : inner) {
      if (c == '"') in_string = !in_string;
      if (c == ',' && !in_string) {
        if (!trim(item).empty()) arr.push_back(parse_toml_scalar(item, line_no));
        item.clear();
      } else {
        item += c;
      }
    }
    if (!trim(item).empty()) arr.push_back(parse_toml_scalar(item, line_no));
    return arr;
  }
  return parse_toml_scalar(v, line_no);
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config field '") + key + "': " + e.what());
  }
}

void read_field(const json& j, const char* key, std::uint64_t& out) {
  if (!j.contains(key)) return;
  if (!j.at(key).is_number()) throw ConfigError(std::string("config field '") + key + "': expected integer");
  out = j.at(key).get<std::uint64_t>();
}

QoeOrientation parse_orientation(const std::string& s) {
  if (s == "as_paper") return QoeOrientation::kAsPaper;
  if (s == "similarity_reward") return QoeOrientation::kSimilarityReward;
  throw ConfigError("config field 'qoe_orientation': unknown value '" + s + "'");
}

PowerNormalization parse_power_norm(const std::string& s) {
  if (s == "minmax_dbm") return PowerNormalization::kMinmaxDbm;
  if (s == "watts") return PowerNormalization::kWatts;
  throw ConfigError("config field 'theta_b_power_normalization': unknown value '" + s + "'");
}

ConflictTiebreak parse_tiebreak(const std::string& s) {
  if (s == "lowest_index") return ConflictTiebreak::kLowestIndex;
  if (s == "random") return ConflictTiebreak::kRandom;
  if (s == "highest_gain") return ConflictTiebreak::kHighestGain;
  throw ConfigError("config field 'conflict_tiebreak': unknown value '" + s + "'");
}

PathlossProfile parse_pathloss(const std::string& s) {
  if (s == "urban_3gpp") return PathlossProfile::kUrban3gpp;
  if (s == "free_space") return PathlossProfile::kFreeSpace;
  throw ConfigError("config field 'pathloss_profile': unknown value '" + s + "'");
}

const char* orientation_name(QoeOrientation o) {
  return o == QoeOrientation::kAsPaper ? "as_paper" : "similarity_reward";
}
const char* power_norm_name(PowerNormalization p) {
  return p == PowerNormalization::kMinmaxDbm ? "minmax_dbm" : "watts";
}
const char* tiebreak_name(ConflictTiebreak t) {
  switch (t) {
    case ConflictTiebreak::kLowestIndex: return "lowest_index";
    case ConflictTiebreak::kRandom: return "random";
    default: return "highest_gain";
  }
}
const char* pathloss_name(PathlossProfile p) {
  return p == PathlossProfile::kUrban3gpp ? "urban_3gpp" : "free_space";
}

}  // namespace

void ScenarioConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("invalid config: " + msg);
  };
  require(num_vehicles >= 1, "num_vehicles must be >= 1");
  require(num_v2i >= 1, "num_v2i must be >= 1");
  require(num_v2v >= 1, "num_v2v must be >= 1");
  require(!v2v_power_levels_dbm.empty(), "v2v_power_levels_dbm must be non-empty");
  require(std::is_sorted(v2v_power_levels_dbm.begin(), v2v_power_levels_dbm.end()),
          "v2v_power_levels_dbm must be sorted ascending");
  for (Scalar p : v2v_power_levels_dbm) {
    require(p >= p_min_dbm && p <= p_max_dbm,
            "v2v_power_levels_dbm entry " + std::to_string(p) + " outside [p_min_dbm, p_max_dbm]");
  }
  require(p_min_dbm < p_max_dbm, "p_min_dbm must be < p_max_dbm");
  require(xi_threshold > 0.0 && xi_threshold < 1.0, "xi_threshold must lie in (0, 1)");
  require(u_max >= 1, "u_max must be >= 1");
  require(episode_steps >= 1, "episode_steps must be >= 1");
  require(carrier_freq_hz > 0.0, "carrier_freq_hz must be positive");
  require(step_duration_s > 0.0, "step_duration_s must be positive");
  require(bandwidth_per_subband_hz > 0.0, "bandwidth_per_subband_hz must be positive");
  require(bits_per_semantic_symbol > 0.0, "bits_per_semantic_symbol must be positive");
  require(demand_words >= 0.0, "demand_words must be non-negative");
  require(shadow_sigma_v2i_db >= 0.0 && shadow_sigma_v2v_db >= 0.0,
          "shadowing deviations must be non-negative");
}

void TrainConfig::validate() const {
  auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError("invalid config: " + msg);
  };
  require(discount >= 0.0 && discount <= 1.0, "discount must lie in [0, 1]");
  require(gae_lambda >= 0.0 && gae_lambda <= 1.0, "gae_lambda must lie in [0, 1]");
  require(clip_epsilon > 0.0, "clip_epsilon must be positive");
  require(lr_final <= lr_initial, "lr_final must be <= lr_initial");
  require(lr_initial > 0.0, "lr_initial must be positive");
  require(iterations >= 1, "iterations must be >= 1");
  require(steps_per_iteration >= 1, "steps_per_iteration must be >= 1");
  require(minibatch_size >= 1, "minibatch_size must be >= 1");
  require(epochs_per_update >= 1, "epochs_per_update must be >= 1");
  require(!hidden_sizes.empty(), "hidden_sizes must be non-empty");
  require(!seeds.empty(), "seeds must be non-empty");
  require(policy_head == "categorical" || policy_head == "gaussian",
          "policy_head must be 'categorical' or 'gaussian'");
  require(value_target == "gae" || value_target == "one_step",
          "value_target must be 'gae' or 'one_step'");
}

json parse_toml_subset(const std::string& text) {
  json root = json::object();
  json* table = &root;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    line = trim(strip_comment(line));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') {
        throw ConfigError("toml parse error at line " + std::to_string(line_no) + ": bad table header");
      }
      const std::string name = trim(line.substr(1, line.size() - 2));
      if (name.empty()) {
        throw ConfigError("toml parse error at line " + std::to_string(line_no) + ": empty table name");
      }
      root[name] = json::object();
      table = &root[name];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("toml parse error at line " + std::to_string(line_no) + ": expected key = value");
    }
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) {
      throw ConfigError("toml parse error at line " + std::to_string(line_no) + ": empty key");
    }
    (*table)[key] = parse_toml_value(line.substr(eq + 1), line_no);
  }
  return root;
}

Config config_from_json(const json& j) {
  Config c;
  static const std::vector<std::string> known_sections = {"scenario", "train"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known_sections.begin(), known_sections.end(), key) == known_sections.end()) {
      throw ConfigError("unknown config section '" + key + "'");
    }
    (void)value;
  }
  if (j.contains("scenario")) {
    const json& s = j.at("scenario");
    ScenarioConfig& sc = c.scenario;
    read_field(s, "num_vehicles", sc.num_vehicles);
    read_field(s, "num_v2i", sc.num_v2i);
    read_field(s, "num_v2v", sc.num_v2v);
    read_field(s, "carrier_freq_hz", sc.carrier_freq_hz);
    read_field(s, "bs_height_m", sc.bs_height_m);
    read_field(s, "vehicle_height_m", sc.vehicle_height_m);
    read_field(s, "lane_width_m", sc.lane_width_m);
    read_field(s, "road_length_m", sc.road_length_m);
    read_field(s, "vehicle_speed_mps", sc.vehicle_speed_mps);
    read_field(s, "vehicle_spacing_m", sc.vehicle_spacing_m);
    read_field(s, "pair_distance_m", sc.pair_distance_m);
    read_field(s, "v2i_power_dbm", sc.v2i_power_dbm);
    read_field(s, "v2v_power_levels_dbm", sc.v2v_power_levels_dbm);
    read_field(s, "p_min_dbm", sc.p_min_dbm);
    read_field(s, "p_max_dbm", sc.p_max_dbm);
    read_field(s, "noise_a_dbm", sc.noise_a_dbm);
    read_field(s, "noise_b_dbm", sc.noise_b_dbm);
    read_field(s, "shadow_sigma_v2i_db", sc.shadow_sigma_v2i_db);
    read_field(s, "shadow_sigma_v2v_db", sc.shadow_sigma_v2v_db);
    read_field(s, "xi_threshold", sc.xi_threshold);
    read_field(s, "sinr_threshold_db", sc.sinr_threshold_db);
    read_field(s, "u_max", sc.u_max);
    read_field(s, "demand_words", sc.demand_words);
    read_field(s, "step_duration_s", sc.step_duration_s);
    read_field(s, "episode_steps", sc.episode_steps);
    read_field(s, "bandwidth_per_subband_hz", sc.bandwidth_per_subband_hz);
    read_field(s, "bits_per_semantic_symbol", sc.bits_per_semantic_symbol);
    read_field(s, "extended_state", sc.extended_state);
    read_field(s, "seed", sc.seed);
    if (s.contains("qoe_orientation")) {
      sc.qoe_orientation = parse_orientation(s.at("qoe_orientation").get<std::string>());
    }
    if (s.contains("theta_b_power_normalization")) {
      sc.theta_b_power_normalization =
          parse_power_norm(s.at("theta_b_power_normalization").get<std::string>());
    }
    if (s.contains("conflict_tiebreak")) {
      sc.conflict_tiebreak = parse_tiebreak(s.at("conflict_tiebreak").get<std::string>());
    }
    if (s.contains("pathloss_profile")) {
      sc.pathloss_profile = parse_pathloss(s.at("pathloss_profile").get<std::string>());
    }
  }
  if (j.contains("train")) {
    const json& t = j.at("train");
    TrainConfig& tc = c.train;
    read_field(t, "discount", tc.discount);
    read_field(t, "gae_lambda", tc.gae_lambda);
    read_field(t, "clip_epsilon", tc.clip_epsilon);
    read_field(t, "lr_initial", tc.lr_initial);
    read_field(t, "lr_final", tc.lr_final);
    read_field(t, "iterations", tc.iterations);
    read_field(t, "steps_per_iteration", tc.steps_per_iteration);
    read_field(t, "minibatch_size", tc.minibatch_size);
    read_field(t, "epochs_per_update", tc.epochs_per_update);
    read_field(t, "penalty_lambda1", tc.penalty_lambda1);
    read_field(t, "penalty_lambda2", tc.penalty_lambda2);
    read_field(t, "entropy_coef", tc.entropy_coef);
    read_field(t, "value_coef", tc.value_coef);
    read_field(t, "max_grad_norm", tc.max_grad_norm);
    read_field(t, "hidden_sizes", tc.hidden_sizes);
    read_field(t, "seeds", tc.seeds);
    read_field(t, "policy_head", tc.policy_head);
    read_field(t, "value_target", tc.value_target);
    read_field(t, "checkpoint_every", tc.checkpoint_every);
    read_field(t, "eval_episodes", tc.eval_episodes);
  }
  c.validate();
  return c;
}

json config_to_json(const Config& config) {
  const ScenarioConfig& s = config.scenario;
  const TrainConfig& t = config.train;
  json j;
  j["scenario"] = {
      {"num_vehicles", s.num_vehicles},
      {"num_v2i", s.num_v2i},
      {"num_v2v", s.num_v2v},
      {"carrier_freq_hz", s.carrier_freq_hz},
      {"bs_height_m", s.bs_height_m},
      {"vehicle_height_m", s.vehicle_height_m},
      {"lane_width_m", s.lane_width_m},
      {"road_length_m", s.road_length_m},
      {"vehicle_speed_mps", s.vehicle_speed_mps},
      {"vehicle_spacing_m", s.vehicle_spacing_m},
      {"pair_distance_m", s.pair_distance_m},
      {"v2i_power_dbm", s.v2i_power_dbm},
      {"v2v_power_levels_dbm", s.v2v_power_levels_dbm},
      {"p_min_dbm", s.p_min_dbm},
      {"p_max_dbm", s.p_max_dbm},
      {"noise_a_dbm", s.noise_a_dbm},
      {"noise_b_dbm", s.noise_b_dbm},
      {"shadow_sigma_v2i_db", s.shadow_sigma_v2i_db},
      {"shadow_sigma_v2v_db", s.shadow_sigma_v2v_db},
      {"xi_threshold", s.xi_threshold},
      {"sinr_threshold_db", s.sinr_threshold_db},
      {"u_max", s.u_max},
      {"demand_words", s.demand_words},
      {"step_duration_s", s.step_duration_s},
      {"episode_steps", s.episode_steps},
      {"bandwidth_per_subband_hz", s.bandwidth_per_subband_hz},
      {"bits_per_semantic_symbol", s.bits_per_semantic_symbol},
      {"qoe_orientation", orientation_name(s.qoe_orientation)},
      {"theta_b_power_normalization", power_norm_name(s.theta_b_power_normalization)},
      {"conflict_tiebreak", tiebreak_name(s.conflict_tiebreak)},
      {"pathloss_profile", pathloss_name(s.pathloss_profile)},
      {"extended_state", s.extended_state},
      {"seed", s.seed},
  };
  j["train"] = {
      {"discount", t.discount},
      {"gae_lambda", t.gae_lambda},
      {"clip_epsilon", t.clip_epsilon},
      {"lr_initial", t.lr_initial},
      {"lr_final", t.lr_final},
      {"iterations", t.iterations},
      {"steps_per_iteration", t.steps_per_iteration},
      {"minibatch_size", t.minibatch_size},
      {"epochs_per_update", t.epochs_per_update},
      {"penalty_lambda1", t.penalty_lambda1},
      {"penalty_lambda2", t.penalty_lambda2},
      {"entropy_coef", t.entropy_coef},
      {"value_coef", t.value_coef},
      {"max_grad_norm", t.max_grad_norm},
      {"hidden_sizes", t.hidden_sizes},
      {"seeds", t.seeds},
      {"policy_head", t.policy_head},
      {"value_target", t.value_target},
      {"checkpoint_every", t.checkpoint_every},
      {"eval_episodes", t.eval_episodes},
  };
  return j;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  const std::string text = buf.str();
  json j;
  if (path.size() >= 5 && path.substr(path.size() - 5) == ".json") {
    try {
      j = json::parse(text);
    } catch (const json::exception& e) {
      throw ConfigError(std::string("json parse error in ") + path + ": " + e.what());
    }
  } else {
    j = parse_toml_subset(text);
  }
  // Manifests embed the resolved config under "config".
  if (j.contains("config") && j.at("config").is_object()) j = j.at("config");
  return config_from_json(j);
}

void apply_override(json& j, const std::string& dotted_assignment) {
  const auto eq = dotted_assignment.find('=');
  if (eq == std::string::npos) {
    throw ConfigError("override must look like section.key=value: " + dotted_assignment);
  }
  const std::string path = trim(dotted_assignment.substr(0, eq));
  const std::string value = trim(dotted_assignment.substr(eq + 1));
  const auto dot = path.find('.');
  if (dot == std::string::npos) {
    throw ConfigError("override path must be section.key: " + path);
  }
  const std::string section = path.substr(0, dot);
  const std::string key = path.substr(dot + 1);
  json parsed;
  try {
    parsed = json::parse(value);
  } catch (const json::exception&) {
    // Bare words (e.g. similarity_reward) are treated as strings.
    parsed = json(value);
  }
  j[section][key] = parsed;
}

std::uint64_t fnv1a(const void* data, std::size_t size) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(const Config& config) {
  const std::string dump = config_to_json(config).dump();
  return fnv1a(dump.data(), dump.size());
}

}  // namespace semveh
