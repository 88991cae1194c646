#pragma once

#include <string>
#include <vector>

#include "fftp/serde.hpp"
#include "fftp/synthdata.hpp"

namespace fftp {

struct RunPaths {
  std::string data_root;  // corpus directory
  std::string labels;     // labels CSV; empty means data_root + "/labels.csv"
  std::string out_dir = "out";

  std::string labels_path() const { return labels.empty() ? data_root + "/labels.csv" : labels; }
};

// One experiment, end to end. Every tool reads the same file; sections it
// does not use are still validated.
struct RunConfig {
  MelConfig frontend;
  PatchConfig patch;
  EncoderConfig model;
  TrainConfig train;  // mask settings come from the "mask" section
  SynthSpec synth;
  RunPaths paths;
};

nlohmann::json to_json(const RunConfig& c);

// Sections: frontend, patch, mask ({specmask, specaugment}), model, train,
// synth, paths. Absent sections keep defaults; unknown keys anywhere raise
// ConfigError with the dotted key path.
RunConfig run_config_from_json(const nlohmann::json& j);

// Sets one dotted key, e.g. "patch.stride_t=5". The value is parsed as
// JSON when possible, otherwise taken as a bare string.
void apply_override(nlohmann::json& root, const std::string& key_value);

// Checks between sections, e.g. the patch geometry against the mel axis.
void validate_cross(const RunConfig& c);

// Reads the file (defaults when path is empty), applies overrides, then
// parses and cross-validates.
RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides);

}  // namespace fftp
