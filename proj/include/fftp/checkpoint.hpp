#pragma once

#include <string>
#include <vector>

#include "fftp/common.hpp"
#include "fftp/encoder.hpp"
#include "json.hpp"

namespace fftp {

// Checkpoint = <stem>.json manifest plus <stem>.bin blob. The manifest
// records a caller-supplied config object and the ordered tensor list
// (name, [rows, cols]); the blob is the tensors' float32 data, column-major,
// little-endian, concatenated in manifest order.
inline constexpr const char* kCheckpointFormat = "fftp-checkpoint-v1";

void save_checkpoint(const std::string& stem, const nlohmann::json& config,
                     const std::vector<TensorView<float>>& views);

// Loads the blob into `views`, which must already have the manifest's exact
// names and shapes in order. Returns the manifest's config object.
nlohmann::json load_checkpoint(const std::string& stem, std::vector<TensorView<float>>& views);

// Reads just the config object, without touching tensor data.
nlohmann::json read_checkpoint_config(const std::string& stem);

}  // namespace fftp
