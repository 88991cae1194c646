#pragma once

#include <set>
#include <string>

#include "fftp/encoder.hpp"
#include "fftp/mel.hpp"
#include "fftp/patch.hpp"
#include "fftp/specmask.hpp"
#include "fftp/trainer.hpp"
#include "json.hpp"

namespace fftp {

// Walks one JSON object; get() marks a key as recognized, finish() rejects
// everything else so config typos fail loudly instead of silently
// defaulting. Errors are ConfigError carrying prefix + key.
class JsonReader {
 public:
  JsonReader(const nlohmann::json& j, std::string prefix) : j_(j), prefix_(std::move(prefix)) {
    if (!j_.is_object()) throw ConfigError(section_name(), "expected an object");
  }

  void get(const char* key, int& out) { number<int>(key, out); }
  void get(const char* key, std::int64_t& out) { number<std::int64_t>(key, out); }

  void get(const char* key, std::uint64_t& out) {
    const nlohmann::json* v = claim(key);
    if (!v) return;
    if (!v->is_number_unsigned() && !(v->is_number_integer() && v->get<std::int64_t>() >= 0))
      throw ConfigError(prefix_ + key, "expected a nonnegative integer");
    out = v->get<std::uint64_t>();
  }

  void get(const char* key, double& out) {
    const nlohmann::json* v = claim(key);
    if (!v) return;
    if (!v->is_number()) throw ConfigError(prefix_ + key, "expected a number");
    out = v->get<double>();
  }

  void get(const char* key, bool& out) {
    const nlohmann::json* v = claim(key);
    if (!v) return;
    if (!v->is_boolean()) throw ConfigError(prefix_ + key, "expected a boolean");
    out = v->get<bool>();
  }

  void get(const char* key, std::string& out) {
    const nlohmann::json* v = claim(key);
    if (!v) return;
    if (!v->is_string()) throw ConfigError(prefix_ + key, "expected a string");
    out = v->get<std::string>();
  }

  // Enum via its from-string parser.
  template <typename T, typename Parse>
  void get_enum(const char* key, T& out, Parse parse) {
    const nlohmann::json* v = claim(key);
    if (!v) return;
    if (!v->is_string()) throw ConfigError(prefix_ + key, "expected a string");
    try {
      out = parse(v->get<std::string>());
    } catch (const InvalidArgument& e) {
      throw ConfigError(prefix_ + key, e.what());
    }
  }

  // Claims a key and returns its value, or nullptr when absent. For
  // sub-objects and arrays handled by the caller.
  const nlohmann::json* sub(const char* key) { return claim(key); }

  std::string path(const char* key) const { return prefix_ + key; }

  void finish() const {
    for (const auto& item : j_.items())
      if (!seen_.count(item.key())) throw ConfigError(prefix_ + item.key(), "unknown key");
  }

 private:
  template <typename T>
  void number(const char* key, T& out) {
    const nlohmann::json* v = claim(key);
    if (!v) return;
    if (!v->is_number_integer()) throw ConfigError(prefix_ + key, "expected an integer");
    out = v->get<T>();
  }

  const nlohmann::json* claim(const char* key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  std::string section_name() const {
    return prefix_.empty() ? std::string("config") : prefix_.substr(0, prefix_.size() - 1);
  }

  const nlohmann::json& j_;
  std::string prefix_;
  std::set<std::string> seen_;
};

nlohmann::json to_json(const MelConfig& c);
nlohmann::json to_json(const PatchConfig& c);
nlohmann::json to_json(const SpecMaskConfig& c);
nlohmann::json to_json(const SpecAugmentConfig& c);
nlohmann::json to_json(const EncoderConfig& c);
nlohmann::json to_json(const TrainConfig& c);  // scalar fields only; mask/spec live in their own section

// Strict parsers: absent keys keep the defaults; unknown keys and type
// mismatches raise ConfigError carrying the full key path (prefix + key).
// Prefixes name the enclosing section, e.g. "frontend.".
MelConfig mel_config_from_json(const nlohmann::json& j, const std::string& prefix = "");
PatchConfig patch_config_from_json(const nlohmann::json& j, const std::string& prefix = "");
SpecMaskConfig specmask_config_from_json(const nlohmann::json& j, const std::string& prefix = "");
SpecAugmentConfig specaugment_config_from_json(const nlohmann::json& j,
                                               const std::string& prefix = "");
EncoderConfig encoder_config_from_json(const nlohmann::json& j, const std::string& prefix = "");
TrainConfig train_config_from_json(const nlohmann::json& j, const std::string& prefix = "");

}  // namespace fftp
