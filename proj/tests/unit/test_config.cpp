#include <filesystem>
#include <fstream>
#include <functional>

#include "doctest.h"
#include "fftp/runconfig.hpp"

using namespace fftp;

namespace {

std::string key_path_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.key_path;
  }
  return "<no throw>";
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("every section survives a json round trip") {
  RunConfig c;
  c.frontend.sample_rate = 22050;
  c.frontend.n_mels = 80;
  c.frontend.frame_shift_ms = 12.5;
  c.patch.mode = PatchMode::kSquare;
  c.patch.patch_f = 16;
  c.patch.patch_t = 16;
  c.patch.stride_f = 10;
  c.patch.stride_t = 10;
  c.model.depth = 7;
  c.model.mlp_ratio = 2.5;
  c.train.task = Task::kSinglelabel;
  c.train.augmentation = Augmentation::kSpecMask;
  c.train.mask.budget_area = 777;
  c.train.mask.max_h = 80;  // must fit under the 80 mel bins above
  c.train.mask.fill = MaskFill::kZero;
  c.train.spec.max_t = 33;
  c.train.peak_lr = 5e-4;
  c.train.warmup_steps = 17;
  c.synth.n_samples = 55;
  c.paths.data_root = "corpus";
  c.paths.labels = "elsewhere.csv";

  const RunConfig back = run_config_from_json(to_json(c));
  CHECK(back.frontend.sample_rate == 22050);
  CHECK(back.frontend.n_mels == 80);
  CHECK(back.frontend.frame_shift_ms == 12.5);
  CHECK(back.patch.mode == PatchMode::kSquare);
  CHECK(back.patch.stride_t == 10);
  CHECK(back.model.depth == 7);
  CHECK(back.model.mlp_ratio == 2.5);
  CHECK(back.train.task == Task::kSinglelabel);
  CHECK(back.train.augmentation == Augmentation::kSpecMask);
  CHECK(back.train.mask.budget_area == 777);
  CHECK(back.train.mask.max_h == 80);
  CHECK(back.train.mask.fill == MaskFill::kZero);
  CHECK(back.train.spec.max_t == 33);
  CHECK(back.train.peak_lr == 5e-4);
  CHECK(back.train.warmup_steps == 17);
  CHECK(back.synth.n_samples == 55);
  CHECK(back.paths.labels_path() == "elsewhere.csv");

  RunConfig plain;
  plain.paths.data_root = "corpus";
  CHECK(plain.paths.labels_path() == "corpus/labels.csv");
}

TEST_CASE("absent sections and keys keep their defaults") {
  const RunConfig c = run_config_from_json(nlohmann::json::object());
  CHECK(c.frontend.n_mels == 128);
  CHECK(c.patch.mode == PatchMode::kFftp);
  CHECK(c.train.epochs == 10);

  const RunConfig partial = run_config_from_json({{"model", {{"depth", 2}}}});
  CHECK(partial.model.depth == 2);
  CHECK(partial.model.dim == 128);
}

TEST_CASE("unknown keys fail with their dotted path") {
  CHECK(key_path_of([] {
          run_config_from_json({{"frontend", {{"n_melz", 64}}}});
        }) == "frontend.n_melz");
  CHECK(key_path_of([] {
          run_config_from_json({{"mask", {{"specmask", {{"budget", 3}}}}}});
        }) == "mask.specmask.budget");
  CHECK(key_path_of([] {
          run_config_from_json({{"mask", {{"specmaskk", nlohmann::json::object()}}}});
        }) == "mask.specmaskk");
  CHECK(key_path_of([] { run_config_from_json({{"frontned", 1}}); }) == "frontned");
  CHECK(key_path_of([] {
          run_config_from_json({{"train", {{"lr", 0.1}}}});
        }) == "train.lr");
}

TEST_CASE("type mismatches name the offending key") {
  CHECK(key_path_of([] {
          run_config_from_json({{"patch", {{"stride_t", "fast"}}}});
        }) == "patch.stride_t");
  CHECK(key_path_of([] {
          run_config_from_json({{"patch", {{"stride_t", 2.5}}}});
        }) == "patch.stride_t");
  CHECK(key_path_of([] {
          run_config_from_json({{"train", {{"seed", -4}}}});
        }) == "train.seed");
  CHECK(key_path_of([] {
          run_config_from_json({{"patch", {{"mode", "circle"}}}});
        }) == "patch.mode");
  CHECK(key_path_of([] {
          run_config_from_json({{"frontend", {{"window", "hamming"}}}});
        }) == "frontend.window");
  CHECK(key_path_of([] { run_config_from_json({{"patch", 3}}); }) == "patch");
}

TEST_CASE("overrides parse values as json with a string fallback") {
  nlohmann::json j = nlohmann::json::object();
  apply_override(j, "patch.stride_t=5");
  apply_override(j, "train.peak_lr=2.5e-3");
  apply_override(j, "train.task=singlelabel");
  apply_override(j, "paths.data_root=/tmp/x");
  apply_override(j, "synth.classes=[]");
  CHECK(j["patch"]["stride_t"] == 5);
  CHECK(j["patch"]["stride_t"].is_number_integer());
  CHECK(j["train"]["peak_lr"] == 2.5e-3);
  CHECK(j["train"]["task"] == "singlelabel");  // bare word falls back to string
  CHECK(j["paths"]["data_root"] == "/tmp/x");
  CHECK(j["synth"]["classes"].is_array());

  // Deep paths create intermediate objects; later writes merge in.
  apply_override(j, "mask.specmask.max_w=9");
  apply_override(j, "mask.specmask.max_h=7");
  CHECK(j["mask"]["specmask"].size() == 2);

  CHECK_THROWS_AS(apply_override(j, "no_equals"), ConfigError);
  CHECK_THROWS_AS(apply_override(j, "=5"), ConfigError);
  CHECK_THROWS_AS(apply_override(j, "patch..x=1"), ConfigError);
  // Descending through a scalar is refused rather than clobbering it.
  CHECK_THROWS_AS(apply_override(j, "patch.stride_t.deep=1"), ConfigError);
}

TEST_CASE("cross-section checks catch geometry that cannot run") {
  RunConfig c;
  c.frontend.n_mels = 64;
  c.patch.patch_f = 64;
  c.patch.stride_f = 64;
  c.train.mask.max_h = 64;
  CHECK_NOTHROW(validate_cross(c));

  c.patch.patch_f = 80;
  c.patch.stride_f = 80;
  CHECK(key_path_of([&] { validate_cross(c); }) == "patch.patch_f");

  c.patch.patch_f = 32;  // under n_mels but not full-band while mode is fftp
  c.patch.stride_f = 32;
  CHECK(key_path_of([&] { validate_cross(c); }) == "patch.patch_f");
  c.patch.mode = PatchMode::kSquare;
  c.patch.patch_t = 32;
  c.patch.stride_t = 32;
  CHECK_NOTHROW(validate_cross(c));

  c.train.mask.max_h = 65;
  CHECK(key_path_of([&] { validate_cross(c); }) == "mask.specmask.max_h");
  c.train.mask.max_h = 64;

  c.train.spec.max_f = 65;
  CHECK_NOTHROW(validate_cross(c));  // specaugment is off
  c.train.augmentation = Augmentation::kSpecAugment;
  CHECK(key_path_of([&] { validate_cross(c); }) == "mask.specaugment.max_f");
}

TEST_CASE("load_run_config reads files, layers overrides, then validates") {
  const auto dir = std::filesystem::temp_directory_path() / "fftp_runcfg";
  std::filesystem::create_directories(dir);
  const std::string path = (dir / "run.json").string();
  std::ofstream(path) << R"({"frontend": {"n_mels": 64}, "patch": {"patch_f": 64, "stride_f": 64},
                             "mask": {"specmask": {"max_h": 64}}})";

  const RunConfig c = load_run_config(path, {"model.depth=2"});
  CHECK(c.frontend.n_mels == 64);
  CHECK(c.model.depth == 2);

  // Overrides land before validation, so they can both fix and break a file.
  CHECK_NOTHROW(load_run_config(path, {"frontend.n_mels=128", "patch.patch_f=128",
                                       "patch.stride_f=128"}));
  CHECK_THROWS_AS(load_run_config(path, {"frontend.n_mels=32"}), ConfigError);

  CHECK_THROWS_AS(load_run_config((dir / "missing.json").string(), {}), IoError);

  const std::string garbled = (dir / "bad.json").string();
  std::ofstream(garbled) << "{not json";
  CHECK_THROWS_AS(load_run_config(garbled, {}), ConfigError);

  const RunConfig defaults = load_run_config("", {});
  CHECK(defaults.frontend.n_mels == 128);
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
