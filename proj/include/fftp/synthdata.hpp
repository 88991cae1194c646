#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fftp/dataset.hpp"
#include "json.hpp"

namespace fftp {

// Event vocabulary for synthesized clips. Each class is one kind plus an
// anchor frequency, so classes differ in where (or how) energy moves across
// the mel axis.
enum class EventKind { kHarmonicStack, kUpChirp, kDownChirp, kNoiseBurst, kAmTone };

std::string to_string(EventKind k);
EventKind event_kind_from_string(const std::string& s);

struct ClassSpec {
  std::string name;
  EventKind kind = EventKind::kHarmonicStack;
  // Fundamental for stacks, carrier for AM tones, start frequency for
  // chirps; ignored by noise bursts.
  double f0 = 500.0;
};

struct SynthSpec {
  int n_samples = 1000;
  double duration_s = 1.0;
  int sample_rate = 16000;
  std::vector<ClassSpec> classes;  // empty means default_classes()
  Task task = Task::kSinglelabel;
  // Multilabel clips carry a uniform count of distinct events in
  // [min_events, max_events]; single-label clips always carry one.
  int min_events = 1;
  int max_events = 3;
  double snr_db_min = 5.0;
  double snr_db_max = 20.0;
  std::uint64_t seed = 0;
};

// Two harmonic stacks (500 / 750 Hz) plus one class per remaining kind.
// The stacks share bandwidth and differ only in partial spacing, so they
// are the deliberately confusable pair.
std::vector<ClassSpec> default_classes();

void validate(const SynthSpec& spec);

nlohmann::json to_json(const SynthSpec& spec);
SynthSpec synth_spec_from_json(const nlohmann::json& j, const std::string& prefix = "");

// Gaussian background noise plus SNR-scaled events at random offsets.
// Clip i depends only on (spec.seed, i); class columns follow the spec's
// class order sorted by name. Samples are clamped to [-1, 1]; when
// `clipped` is given it receives one flag per clip.
Dataset generate(const SynthSpec& spec, std::vector<bool>* clipped = nullptr);

// generate() + clip_%05d.wav files, labels.csv, and manifest.json holding
// the spec echo and per-file CRC32 checksums. Same spec, same bytes.
Dataset write_corpus(const SynthSpec& spec, const std::string& dir);

// Loads the WAVs named by a labels CSV; relative paths resolve against
// root. Duplicate paths union their labels into one row (first-seen wave
// order); class columns are the sorted distinct label names.
Dataset load_labeled_dir(const std::string& root, const std::string& labels_csv);

// IEEE CRC32 (reflected, poly 0xEDB88320) of a byte buffer.
std::uint32_t crc32(const void* data, std::size_t size);

}  // namespace fftp
