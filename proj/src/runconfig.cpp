#include "fftp/runconfig.hpp"

#include <fstream>

namespace fftp {

namespace {

RunPaths paths_from_json(const nlohmann::json& j, const std::string& prefix) {
  RunPaths p;
  JsonReader r(j, prefix);
  r.get("data_root", p.data_root);
  r.get("labels", p.labels);
  r.get("out_dir", p.out_dir);
  r.finish();
  return p;
}

}  // namespace

nlohmann::json to_json(const RunConfig& c) {
  return {{"frontend", to_json(c.frontend)},
          {"patch", to_json(c.patch)},
          {"mask", {{"specmask", to_json(c.train.mask)}, {"specaugment", to_json(c.train.spec)}}},
          {"model", to_json(c.model)},
          {"train", to_json(c.train)},
          {"synth", to_json(c.synth)},
          {"paths",
           {{"data_root", c.paths.data_root},
            {"labels", c.paths.labels},
            {"out_dir", c.paths.out_dir}}}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  JsonReader r(j, "");
  if (const nlohmann::json* s = r.sub("frontend")) c.frontend = mel_config_from_json(*s, "frontend.");
  if (const nlohmann::json* s = r.sub("patch")) c.patch = patch_config_from_json(*s, "patch.");
  if (const nlohmann::json* s = r.sub("model")) c.model = encoder_config_from_json(*s, "model.");
  if (const nlohmann::json* s = r.sub("train")) c.train = train_config_from_json(*s, "train.");
  if (const nlohmann::json* s = r.sub("mask")) {
    JsonReader mr(*s, "mask.");
    if (const nlohmann::json* m = mr.sub("specmask"))
      c.train.mask = specmask_config_from_json(*m, "mask.specmask.");
    if (const nlohmann::json* m = mr.sub("specaugment"))
      c.train.spec = specaugment_config_from_json(*m, "mask.specaugment.");
    mr.finish();
  }
  if (const nlohmann::json* s = r.sub("synth")) c.synth = synth_spec_from_json(*s, "synth.");
  if (const nlohmann::json* s = r.sub("paths")) c.paths = paths_from_json(*s, "paths.");
  r.finish();
  validate_cross(c);
  return c;
}

void apply_override(nlohmann::json& root, const std::string& key_value) {
  const auto eq = key_value.find('=');
  if (eq == std::string::npos || eq == 0)
    throw ConfigError(key_value, "override must look like key.path=value");
  const std::string key = key_value.substr(0, eq);
  const std::string raw = key_value.substr(eq + 1);

  nlohmann::json value = nlohmann::json::parse(raw, nullptr, /*allow_exceptions=*/false);
  if (value.is_discarded()) value = raw;

  nlohmann::json* node = &root;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw ConfigError(key, "empty path segment");
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    if (node->contains(part) && !(*node)[part].is_object())
      throw ConfigError(key.substr(0, dot), "not an object");
    node = &(*node)[part];
    start = dot + 1;
  }
}

void validate_cross(const RunConfig& c) {
  if (c.patch.patch_f > c.frontend.n_mels)
    throw ConfigError("patch.patch_f", "exceeds frontend.n_mels");
  if (c.patch.mode == PatchMode::kFftp &&
      (c.patch.patch_f != c.frontend.n_mels || c.patch.stride_f != c.frontend.n_mels))
    throw ConfigError("patch.patch_f", "fftp mode needs patch_f == stride_f == frontend.n_mels");
  if (c.train.mask.max_h > c.frontend.n_mels)
    throw ConfigError("mask.specmask.max_h", "exceeds frontend.n_mels");
  if (c.train.augmentation == Augmentation::kSpecAugment && c.train.spec.max_f > c.frontend.n_mels)
    throw ConfigError("mask.specaugment.max_f", "exceeds frontend.n_mels");
}

RunConfig load_run_config(const std::string& path, const std::vector<std::string>& overrides) {
  nlohmann::json j = nlohmann::json::object();
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config " + path);
    j = nlohmann::json::parse(in, nullptr, /*allow_exceptions=*/false);
    if (j.is_discarded()) throw ConfigError(path, "not valid JSON");
  }
  for (const auto& kv : overrides) apply_override(j, kv);
  return run_config_from_json(j);
}

}  // namespace fftp
