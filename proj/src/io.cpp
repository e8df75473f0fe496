#include "semveh/io.hpp"

#include <chrono>
#include <cstdio>
#include <ctime>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace semveh {

namespace {

using nlohmann::json;

json mlp_to_json(const Mlp& mlp) {
  json j;
  j["layer_sizes"] = mlp.layer_sizes();
  const Vector<> flat = mlp.flatten();
  std::vector<Scalar> params(flat.data(), flat.data() + flat.size());
  j["params"] = params;
  return j;
}

Mlp mlp_from_json(const json& j) {
  const std::vector<int> sizes = j.at("layer_sizes").get<std::vector<int>>();
  if (sizes.size() < 2) throw std::runtime_error("checkpoint: bad layer_sizes");
  const std::vector<int> hidden(sizes.begin() + 1, sizes.end() - 1);
  Mlp mlp(sizes.front(), hidden, sizes.back());
  const std::vector<Scalar> params = j.at("params").get<std::vector<Scalar>>();
  Vector<> flat = Eigen::Map<const Vector<>>(params.data(), static_cast<Index>(params.size()));
  mlp.unflatten(flat);
  return mlp;
}

json adam_to_json(const AdamOptimizer& opt) {
  json j;
  auto dump_mats = [](const std::vector<Matrix<>>& mats) {
    json arr = json::array();
    for (const auto& m : mats) {
      std::vector<Scalar> v(m.data(), m.data() + m.size());
      arr.push_back({{"rows", m.rows()}, {"cols", m.cols()}, {"data", v}});
    }
    return arr;
  };
  auto dump_vecs = [](const std::vector<Vector<>>& vecs) {
    json arr = json::array();
    for (const auto& m : vecs) {
      std::vector<Scalar> v(m.data(), m.data() + m.size());
      arr.push_back(v);
    }
    return arr;
  };
  j["m_w"] = dump_mats(opt.m_w);
  j["v_w"] = dump_mats(opt.v_w);
  j["m_b"] = dump_vecs(opt.m_b);
  j["v_b"] = dump_vecs(opt.v_b);
  j["t"] = opt.timestep();
  return j;
}

void adam_from_json(const json& j, AdamOptimizer& opt) {
  auto load_mats = [](const json& arr, std::vector<Matrix<>>& mats) {
    mats.clear();
    for (const auto& e : arr) {
      const auto rows = e.at("rows").get<Index>();
      const auto cols = e.at("cols").get<Index>();
      const std::vector<Scalar> v = e.at("data").get<std::vector<Scalar>>();
      Matrix<> m = Eigen::Map<const Matrix<>>(v.data(), rows, cols);
      mats.push_back(std::move(m));
    }
  };
  auto load_vecs = [](const json& arr, std::vector<Vector<>>& vecs) {
    vecs.clear();
    for (const auto& e : arr) {
      const std::vector<Scalar> v = e.get<std::vector<Scalar>>();
      vecs.push_back(Eigen::Map<const Vector<>>(v.data(), static_cast<Index>(v.size())));
    }
  };
  load_mats(j.at("m_w"), opt.m_w);
  load_mats(j.at("v_w"), opt.v_w);
  load_vecs(j.at("m_b"), opt.m_b);
  load_vecs(j.at("v_b"), opt.v_b);
  opt.set_timestep(j.at("t").get<long>());
}

}  // namespace

void save_checkpoint(const std::string& path, const TrainerState& ts, const Config& config) {
  json j;
  j["format"] = "semveh-checkpoint-v1";
  j["config_hash"] = config_hash(config);
  j["iteration"] = ts.iteration;
  j["head_mode"] = ts.ac.head_mode();
  j["head_sizes"] = ts.ac.layout().sizes;
  j["actor"] = mlp_to_json(ts.ac.actor);
  j["critic"] = mlp_to_json(ts.ac.critic);
  j["adam_actor"] = adam_to_json(ts.adam_actor);
  j["adam_critic"] = adam_to_json(ts.adam_critic);
  j["rollout_rng"] = ts.rollout_rng.serialize();
  j["shuffle_rng"] = ts.shuffle_rng.serialize();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  out << j.dump(1) << "\n";
}

TrainerState load_checkpoint(const std::string& path, const Config& config, bool check_hash) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("bad checkpoint " + path + ": " + e.what());
  }
  if (check_hash && j.at("config_hash").get<std::uint64_t>() != config_hash(config)) {
    throw std::runtime_error("checkpoint " + path + " was produced by a different config");
  }
  TrainerState ts;
  ts.ac = ActorCritic(mlp_from_json(j.at("actor")), mlp_from_json(j.at("critic")),
                      j.at("head_sizes").get<std::vector<int>>(),
                      j.at("head_mode").get<std::string>());
  ts.iteration = j.at("iteration").get<int>();
  ts.adam_actor = AdamOptimizer(ts.ac.actor);
  ts.adam_critic = AdamOptimizer(ts.ac.critic);
  adam_from_json(j.at("adam_actor"), ts.adam_actor);
  adam_from_json(j.at("adam_critic"), ts.adam_critic);
  ts.rollout_rng.deserialize(j.at("rollout_rng").get<std::string>());
  ts.shuffle_rng.deserialize(j.at("shuffle_rng").get<std::string>());
  ts.needs_reset = true;
  return ts;
}

CsvWriter::CsvWriter(const std::string& path, const std::string& manifest_note,
                     const std::vector<std::string>& columns)
    : path_(path), out_(path), num_columns_(columns.size()) {
  if (!out_) throw std::runtime_error("cannot write csv: " + path);
  out_ << "# manifest: " << manifest_note << "\n";
  for (std::size_t i = 0; i < columns.size(); ++i) {
    out_ << columns[i] << (i + 1 < columns.size() ? "," : "");
  }
  out_ << "\n";
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != num_columns_) {
    throw std::runtime_error("csv row width mismatch in " + path_);
  }
  for (std::size_t i = 0; i < cells.size(); ++i) {
    out_ << cells[i] << (i + 1 < cells.size() ? "," : "");
  }
  out_ << "\n";
}

std::string CsvWriter::format(Scalar v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::string RunManifest::note() const {
  return command + " config_hash=" + std::to_string(config_hash(config));
}

void RunManifest::save(const std::string& path) const {
  json j;
  j["format"] = "semveh-manifest-v1";
  j["command"] = command;
  j["config"] = config_to_json(config);
  j["config_hash"] = config_hash(config);
  j["seeds"] = seeds;
  j["out_dir"] = out_dir;
  j["version"] = version;
  j["created_utc"] = created_utc;
  j["outputs"] = outputs;
  if (!axis.empty()) {
    j["axis"] = axis;
    j["axis_values"] = axis_values;
  }
  if (!params.empty()) j["params"] = params;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path);
  out << j.dump(1) << "\n";
}

RunManifest RunManifest::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open manifest: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("bad manifest " + path + ": " + e.what());
  }
  RunManifest m;
  m.command = j.at("command").get<std::string>();
  m.config = config_from_json(j.at("config"));
  m.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  m.out_dir = j.at("out_dir").get<std::string>();
  m.version = j.value("version", "");
  m.created_utc = j.value("created_utc", "");
  m.outputs = j.value("outputs", std::vector<std::string>{});
  m.axis = j.value("axis", "");
  m.axis_values = j.value("axis_values", std::vector<Scalar>{});
  if (j.contains("params")) {
    m.params = j.at("params").get<std::map<std::string, std::string>>();
  }
  return m;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

}  // namespace semveh
