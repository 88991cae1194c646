#include "fftp/checkpoint.hpp"

#include <bit>
#include <fstream>

static_assert(std::endian::native == std::endian::little,
              "checkpoint blobs are written via raw memory and assume a little-endian host");

namespace fftp {

namespace {

nlohmann::json parse_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  if (manifest.value("format", "") != kCheckpointFormat)
    throw ParseError(path + ": unknown checkpoint format");
  return manifest;
}

}  // namespace

void save_checkpoint(const std::string& stem, const nlohmann::json& config,
                     const std::vector<TensorView<float>>& views) {
  nlohmann::json manifest;
  manifest["format"] = kCheckpointFormat;
  manifest["config"] = config;
  auto& tensors = manifest["tensors"] = nlohmann::json::array();
  for (const auto& v : views)
    tensors.push_back({{"name", v.name}, {"shape", {v.rows, v.cols}}});

  std::ofstream jout(stem + ".json");
  if (!jout) throw IoError("cannot write " + stem + ".json");
  jout << manifest.dump(2) << "\n";
  if (!jout.flush()) throw IoError("write failed: " + stem + ".json");

  std::ofstream bout(stem + ".bin", std::ios::binary);
  if (!bout) throw IoError("cannot write " + stem + ".bin");
  for (const auto& v : views)
    bout.write(reinterpret_cast<const char*>(v.data),
               static_cast<std::streamsize>(v.size() * sizeof(float)));
  if (!bout.flush()) throw IoError("write failed: " + stem + ".bin");
}

nlohmann::json load_checkpoint(const std::string& stem, std::vector<TensorView<float>>& views) {
  nlohmann::json manifest = parse_manifest(stem + ".json");
  const auto& tensors = manifest.at("tensors");
  if (tensors.size() != views.size())
    throw ParseError(stem + ".json: tensor count mismatch (manifest " +
                     std::to_string(tensors.size()) + ", expected " +
                     std::to_string(views.size()) + ")");
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& t = tensors[i];
    const std::string name = t.at("name").get<std::string>();
    const auto rows = t.at("shape").at(0).get<std::int64_t>();
    const auto cols = t.at("shape").at(1).get<std::int64_t>();
    if (name != views[i].name || rows != views[i].rows || cols != views[i].cols)
      throw ParseError(stem + ".json: tensor " + std::to_string(i) + " is " + name + " [" +
                       std::to_string(rows) + "," + std::to_string(cols) + "], expected " +
                       views[i].name + " [" + std::to_string(views[i].rows) + "," +
                       std::to_string(views[i].cols) + "]");
  }

  std::ifstream bin(stem + ".bin", std::ios::binary);
  if (!bin) throw IoError("cannot open " + stem + ".bin");
  for (auto& v : views) {
    bin.read(reinterpret_cast<char*>(v.data),
             static_cast<std::streamsize>(v.size() * sizeof(float)));
    if (bin.gcount() != static_cast<std::streamsize>(v.size() * sizeof(float)))
      throw ParseError(stem + ".bin: truncated at tensor " + v.name);
  }
  char extra;
  if (bin.read(&extra, 1)) throw ParseError(stem + ".bin: trailing bytes after last tensor");
  return manifest.at("config");
}

nlohmann::json read_checkpoint_config(const std::string& stem) {
  return parse_manifest(stem + ".json").at("config");
}

}  // namespace fftp
