#include "fftp/serde.hpp"

namespace fftp {

nlohmann::json to_json(const MelConfig& c) {
  return {{"sample_rate", c.sample_rate},
          {"n_mels", c.n_mels},
          {"frame_shift_ms", c.frame_shift_ms},
          {"frame_length_ms", c.frame_length_ms},
          {"n_fft", c.n_fft},
          {"window", "hanning"},
          {"mel_scale", "htk"},
          {"log_floor", c.log_floor}};
}

MelConfig mel_config_from_json(const nlohmann::json& j, const std::string& prefix) {
  MelConfig c;
  JsonReader r(j, prefix);
  r.get("sample_rate", c.sample_rate);
  r.get("n_mels", c.n_mels);
  r.get("frame_shift_ms", c.frame_shift_ms);
  r.get("frame_length_ms", c.frame_length_ms);
  r.get("n_fft", c.n_fft);
  std::string window = "hanning";
  r.get("window", window);
  if (window != "hanning") throw ConfigError(prefix + "window", "unknown window: " + window);
  std::string scale = "htk";
  r.get("mel_scale", scale);
  if (scale != "htk") throw ConfigError(prefix + "mel_scale", "unknown mel scale: " + scale);
  r.get("log_floor", c.log_floor);
  r.finish();
  return c;
}

nlohmann::json to_json(const PatchConfig& c) {
  return {{"patch_f", c.patch_f},
          {"patch_t", c.patch_t},
          {"stride_f", c.stride_f},
          {"stride_t", c.stride_t},
          {"mode", to_string(c.mode)}};
}

PatchConfig patch_config_from_json(const nlohmann::json& j, const std::string& prefix) {
  PatchConfig c;
  JsonReader r(j, prefix);
  r.get("patch_f", c.patch_f);
  r.get("patch_t", c.patch_t);
  r.get("stride_f", c.stride_f);
  r.get("stride_t", c.stride_t);
  r.get_enum("mode", c.mode, patch_mode_from_string);
  r.finish();
  return c;
}

nlohmann::json to_json(const SpecMaskConfig& c) {
  return {{"budget_area", c.budget_area},
          {"max_h", c.max_h},
          {"max_w", c.max_w},
          {"full_freq_prob", c.full_freq_prob},
          {"fill", to_string(c.fill)},
          {"per_mask_attempts", c.per_mask_attempts},
          {"global_attempt_cap", c.global_attempt_cap}};
}

SpecMaskConfig specmask_config_from_json(const nlohmann::json& j, const std::string& prefix) {
  SpecMaskConfig c;
  JsonReader r(j, prefix);
  r.get("budget_area", c.budget_area);
  r.get("max_h", c.max_h);
  r.get("max_w", c.max_w);
  r.get("full_freq_prob", c.full_freq_prob);
  r.get_enum("fill", c.fill, mask_fill_from_string);
  r.get("per_mask_attempts", c.per_mask_attempts);
  r.get("global_attempt_cap", c.global_attempt_cap);
  r.finish();
  return c;
}

nlohmann::json to_json(const SpecAugmentConfig& c) {
  return {{"max_t", c.max_t}, {"max_f", c.max_f}, {"n_t", c.n_t}, {"n_f", c.n_f}};
}

SpecAugmentConfig specaugment_config_from_json(const nlohmann::json& j,
                                               const std::string& prefix) {
  SpecAugmentConfig c;
  JsonReader r(j, prefix);
  r.get("max_t", c.max_t);
  r.get("max_f", c.max_f);
  r.get("n_t", c.n_t);
  r.get("n_f", c.n_f);
  r.finish();
  return c;
}

nlohmann::json to_json(const EncoderConfig& c) {
  return {{"depth", c.depth},
          {"dim", c.dim},
          {"heads", c.heads},
          {"mlp_ratio", c.mlp_ratio},
          {"n_classes", c.n_classes},
          {"max_tokens", c.max_tokens}};
}

EncoderConfig encoder_config_from_json(const nlohmann::json& j, const std::string& prefix) {
  EncoderConfig c;
  JsonReader r(j, prefix);
  r.get("depth", c.depth);
  r.get("dim", c.dim);
  r.get("heads", c.heads);
  r.get("mlp_ratio", c.mlp_ratio);
  r.get("n_classes", c.n_classes);
  r.get("max_tokens", c.max_tokens);
  r.finish();
  return c;
}

nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"peak_lr", c.peak_lr},
          {"warmup_steps", c.warmup_steps},
          {"weight_decay", c.weight_decay},
          {"seed", c.seed},
          {"task", to_string(c.task)},
          {"mixup_lambda", c.mixup_lambda},
          {"augmentation", to_string(c.augmentation)},
          {"val_fraction", c.val_fraction}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, const std::string& prefix) {
  TrainConfig c;
  JsonReader r(j, prefix);
  r.get("epochs", c.epochs);
  r.get("batch_size", c.batch_size);
  r.get("peak_lr", c.peak_lr);
  r.get("warmup_steps", c.warmup_steps);
  r.get("weight_decay", c.weight_decay);
  r.get("seed", c.seed);
  r.get_enum("task", c.task, task_from_string);
  r.get("mixup_lambda", c.mixup_lambda);
  r.get_enum("augmentation", c.augmentation, augmentation_from_string);
  r.get("val_fraction", c.val_fraction);
  r.finish();
  return c;
}

}  // namespace fftp
