#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "semveh/config.hpp"
#include "semveh/ppo.hpp"

namespace semveh {

/// Training checkpoint: layer shapes and flat parameters in decimal JSON,
/// optimizer moments, RNG states, config hash.
void save_checkpoint(const std::string& path, const TrainerState& ts, const Config& config);

/// Restores a TrainerState; verifies the config hash matches and throws
/// otherwise (pass check_hash = false to skip).
TrainerState load_checkpoint(const std::string& path, const Config& config,
                             bool check_hash = true);

/// CSV writer with the shared conventions: a `# manifest:` comment line,
/// a header row, and %.9g float formatting.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::string& manifest_note,
            const std::vector<std::string>& columns);

  void row(const std::vector<std::string>& cells);
  const std::string& path() const { return path_; }

  static std::string format(Scalar v);
  static std::string format(int v) { return std::to_string(v); }
  static std::string format(long v) { return std::to_string(v); }

 private:
  std::string path_;
  std::ofstream out_;
  std::size_t num_columns_;
};

/// Run manifest: resolved config, seeds, outputs; sufficient to rerun the
/// command bit-identically.
struct RunManifest {
  std::string command;
  Config config;
  std::vector<std::uint64_t> seeds;
  std::string out_dir;
  std::string version;
  std::string created_utc;
  std::vector<std::string> outputs;
  std::string axis;                  // sweeps only
  std::vector<Scalar> axis_values;   // sweeps only
  std::map<std::string, std::string> params;  // extra command arguments

  std::string note() const;  // the "# manifest:" comment payload
  void save(const std::string& path) const;
  static RunManifest load(const std::string& path);
};

std::string utc_timestamp();

}  // namespace semveh
