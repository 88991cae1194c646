#include "fftp/synthdata.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <unordered_map>

#include "fftp/rng.hpp"
#include "fftp/serde.hpp"
#include "fftp/wav.hpp"

namespace fftp {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;
constexpr double kNoiseRms = 0.05;
constexpr std::uint64_t kStreamClip = 0x5D17AC01ULL;

// Renders one event at unit RMS. Every kind draws its phases from rng in a
// fixed order, so clip synthesis stays reproducible.
std::vector<double> synth_event(const ClassSpec& cls, int sr, int length, Rng& rng) {
  std::vector<double> e(length, 0.0);
  const double dt = 1.0 / sr;
  const double f_cap = 0.45 * sr;
  switch (cls.kind) {
    case EventKind::kHarmonicStack: {
      int n_partials = 0;
      while (n_partials < 6 && (n_partials + 1) * cls.f0 < f_cap) ++n_partials;
      if (n_partials < 1) n_partials = 1;
      for (int k = 1; k <= n_partials; ++k) {
        const double amp = 1.0 / k;
        const double phase = rng.uniform01() * kTwoPi;
        const double w = kTwoPi * k * cls.f0 * dt;
        for (int s = 0; s < length; ++s) e[s] += amp * std::sin(w * s + phase);
      }
      break;
    }
    case EventKind::kUpChirp:
    case EventKind::kDownChirp: {
      const bool up = cls.kind == EventKind::kUpChirp;
      const double f_start = cls.f0;
      const double f_end =
          up ? std::min(2.5 * cls.f0, f_cap) : std::max(cls.f0 / 2.5, 50.0);
      const double slope = (f_end - f_start) / (length * dt);
      const double phase = rng.uniform01() * kTwoPi;
      for (int s = 0; s < length; ++s) {
        const double t = s * dt;
        e[s] = std::sin(kTwoPi * (f_start * t + 0.5 * slope * t * t) + phase);
      }
      break;
    }
    case EventKind::kNoiseBurst: {
      for (int s = 0; s < length; ++s) e[s] = rng.gaussian();
      break;
    }
    case EventKind::kAmTone: {
      const double fm = 8.0;
      const double carrier_phase = rng.uniform01() * kTwoPi;
      const double mod_phase = rng.uniform01() * kTwoPi;
      for (int s = 0; s < length; ++s) {
        const double t = s * dt;
        e[s] = (1.0 + 0.8 * std::sin(kTwoPi * fm * t + mod_phase)) *
               std::sin(kTwoPi * cls.f0 * t + carrier_phase);
      }
      break;
    }
  }

  // Raised-cosine onset/offset ramps, then unit RMS over the full support.
  const int ramp = std::min(static_cast<int>(0.01 * sr), length / 4);
  for (int i = 0; i < ramp; ++i) {
    const double w = 0.5 - 0.5 * std::cos(kTwoPi / 2.0 * i / ramp);
    e[i] *= w;
    e[length - 1 - i] *= w;
  }
  double sumsq = 0.0;
  for (double v : e) sumsq += v * v;
  const double rms = std::sqrt(sumsq / length);
  if (rms > 0.0)
    for (double& v : e) v /= rms;
  return e;
}

std::string clip_name(int index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "clip_%05d.wav", index);
  return buf;
}

}  // namespace

std::string to_string(EventKind k) {
  switch (k) {
    case EventKind::kHarmonicStack: return "harmonic_stack";
    case EventKind::kUpChirp: return "up_chirp";
    case EventKind::kDownChirp: return "down_chirp";
    case EventKind::kNoiseBurst: return "noise_burst";
    case EventKind::kAmTone: return "am_tone";
  }
  throw InvalidArgument("unknown event kind");
}

EventKind event_kind_from_string(const std::string& s) {
  if (s == "harmonic_stack") return EventKind::kHarmonicStack;
  if (s == "up_chirp") return EventKind::kUpChirp;
  if (s == "down_chirp") return EventKind::kDownChirp;
  if (s == "noise_burst") return EventKind::kNoiseBurst;
  if (s == "am_tone") return EventKind::kAmTone;
  throw InvalidArgument("unknown event kind: " + s);
}

std::vector<ClassSpec> default_classes() {
  return {{"am_tone", EventKind::kAmTone, 2000.0},
          {"chirp_down", EventKind::kDownChirp, 3000.0},
          {"chirp_up", EventKind::kUpChirp, 400.0},
          {"harmonic_500", EventKind::kHarmonicStack, 500.0},
          {"harmonic_750", EventKind::kHarmonicStack, 750.0},
          {"noise_burst", EventKind::kNoiseBurst, 0.0}};
}

void validate(const SynthSpec& spec) {
  if (spec.n_samples < 1) throw InvalidArgument("synth: n_samples must be >= 1");
  if (!(spec.duration_s > 0.0)) throw InvalidArgument("synth: duration_s must be > 0");
  if (spec.sample_rate < 1000) throw InvalidArgument("synth: sample_rate must be >= 1000");
  const auto classes = spec.classes.empty() ? default_classes() : spec.classes;
  if (classes.size() < 2) throw InvalidArgument("synth: need at least 2 classes");
  std::set<std::string> names;
  for (const auto& c : classes) {
    if (c.name.empty()) throw InvalidArgument("synth: class name must be nonempty");
    if (!names.insert(c.name).second)
      throw InvalidArgument("synth: duplicate class name: " + c.name);
    if (c.kind != EventKind::kNoiseBurst && !(c.f0 > 0.0 && c.f0 < 0.45 * spec.sample_rate))
      throw InvalidArgument("synth: f0 out of range for class " + c.name);
  }
  if (spec.min_events < 1 || spec.max_events < spec.min_events ||
      spec.max_events > static_cast<int>(classes.size()))
    throw InvalidArgument("synth: need 1 <= min_events <= max_events <= n_classes");
  if (spec.snr_db_max < spec.snr_db_min)
    throw InvalidArgument("synth: snr_db_max must be >= snr_db_min");
}

nlohmann::json to_json(const SynthSpec& spec) {
  nlohmann::json classes = nlohmann::json::array();
  for (const auto& c : spec.classes)
    classes.push_back({{"name", c.name}, {"kind", to_string(c.kind)}, {"f0", c.f0}});
  return {{"n_samples", spec.n_samples},
          {"duration_s", spec.duration_s},
          {"sample_rate", spec.sample_rate},
          {"classes", classes},
          {"task", to_string(spec.task)},
          {"min_events", spec.min_events},
          {"max_events", spec.max_events},
          {"snr_db_min", spec.snr_db_min},
          {"snr_db_max", spec.snr_db_max},
          {"seed", spec.seed}};
}

SynthSpec synth_spec_from_json(const nlohmann::json& j, const std::string& prefix) {
  SynthSpec spec;
  JsonReader r(j, prefix);
  r.get("n_samples", spec.n_samples);
  r.get("duration_s", spec.duration_s);
  r.get("sample_rate", spec.sample_rate);
  if (const nlohmann::json* classes = r.sub("classes")) {
    if (!classes->is_array()) throw ConfigError(r.path("classes"), "expected an array");
    spec.classes.clear();
    for (std::size_t i = 0; i < classes->size(); ++i) {
      const std::string cls_prefix = r.path("classes") + "." + std::to_string(i) + ".";
      JsonReader cr((*classes)[i], cls_prefix);
      ClassSpec c;
      cr.get("name", c.name);
      cr.get_enum("kind", c.kind, event_kind_from_string);
      cr.get("f0", c.f0);
      cr.finish();
      spec.classes.push_back(std::move(c));
    }
  }
  r.get_enum("task", spec.task, task_from_string);
  r.get("min_events", spec.min_events);
  r.get("max_events", spec.max_events);
  r.get("snr_db_min", spec.snr_db_min);
  r.get("snr_db_max", spec.snr_db_max);
  r.get("seed", spec.seed);
  r.finish();
  return spec;
}

Dataset generate(const SynthSpec& spec, std::vector<bool>* clipped) {
  validate(spec);
  std::vector<ClassSpec> classes = spec.classes.empty() ? default_classes() : spec.classes;
  std::sort(classes.begin(), classes.end(),
            [](const ClassSpec& a, const ClassSpec& b) { return a.name < b.name; });
  const int C = static_cast<int>(classes.size());
  const int L = static_cast<int>(std::llround(spec.duration_s * spec.sample_rate));

  Dataset d;
  for (const auto& c : classes) d.class_names.push_back(c.name);
  d.targets = MatF::Zero(spec.n_samples, C);
  d.waves.resize(spec.n_samples);
  if (clipped) clipped->assign(spec.n_samples, false);

  std::vector<int> order(C);
  for (int i = 0; i < spec.n_samples; ++i) {
    Rng rng(Rng::derive(Rng::derive(spec.seed, kStreamClip), static_cast<std::uint64_t>(i)));
    std::vector<float> x(L);
    for (int s = 0; s < L; ++s) x[s] = static_cast<float>(kNoiseRms * rng.gaussian());

    const int n_events =
        spec.task == Task::kSinglelabel ? 1 : rng.uniform_int(spec.min_events, spec.max_events);
    std::iota(order.begin(), order.end(), 0);
    for (int j = 0; j < n_events; ++j) std::swap(order[j], order[rng.uniform_int(j, C - 1)]);

    for (int j = 0; j < n_events; ++j) {
      const ClassSpec& cls = classes[order[j]];
      const double snr_db =
          spec.snr_db_min + rng.uniform01() * (spec.snr_db_max - spec.snr_db_min);
      const double gain = kNoiseRms * std::pow(10.0, snr_db / 20.0);
      const double frac = 0.4 + rng.uniform01() * 0.4;
      const int ev_len = std::max(2, static_cast<int>(std::llround(frac * L)));
      const int offset = rng.uniform_int(0, L - ev_len);
      const std::vector<double> e = synth_event(cls, spec.sample_rate, ev_len, rng);
      for (int s = 0; s < ev_len; ++s) x[offset + s] += static_cast<float>(gain * e[s]);
      d.targets(i, order[j]) = 1.0f;
    }

    bool clip = false;
    for (float& v : x) {
      if (v > 1.0f) v = 1.0f, clip = true;
      if (v < -1.0f) v = -1.0f, clip = true;
    }
    if (clipped && clip) (*clipped)[i] = true;
    d.waves[i] = Waveform{std::move(x), spec.sample_rate};
  }
  return d;
}

Dataset write_corpus(const SynthSpec& spec, const std::string& dir) {
  Dataset d = generate(spec);
  std::filesystem::create_directories(dir);

  nlohmann::json files = nlohmann::json::array();
  std::vector<LabeledFile> rows;
  for (int i = 0; i < d.size(); ++i) {
    const std::string name = clip_name(i);
    const std::string path = dir + "/" + name;
    const bool clip = save_wav(path, d.waves[i]);

    std::ifstream in(path, std::ios::binary);
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (!in.good() && !in.eof()) throw IoError("cannot re-read " + path);
    char crc[16];
    std::snprintf(crc, sizeof(crc), "%08x", crc32(bytes.data(), bytes.size()));
    files.push_back({{"path", name}, {"crc32", crc}, {"clipped", clip}});

    LabeledFile row;
    row.path = name;
    for (int c = 0; c < d.n_classes(); ++c)
      if (d.targets(i, c) > 0.5f) row.labels.push_back(d.class_names[c]);
    rows.push_back(std::move(row));
  }

  write_labels_csv(dir + "/labels.csv", rows);

  nlohmann::json manifest = {
      {"format", "fftp-corpus-v1"}, {"spec", to_json(spec)}, {"files", files}};
  std::ofstream out(dir + "/manifest.json");
  out << manifest.dump(2) << "\n";
  if (!out) throw IoError("cannot write " + dir + "/manifest.json");
  return d;
}

Dataset load_labeled_dir(const std::string& root, const std::string& labels_csv) {
  const std::vector<LabeledFile> rows = read_labels_csv(labels_csv);

  std::vector<std::string> paths;
  std::vector<std::set<std::string>> labels_of;
  std::unordered_map<std::string, int> row_of;
  std::set<std::string> all_labels;
  for (const auto& row : rows) {
    auto [it, fresh] = row_of.try_emplace(row.path, static_cast<int>(paths.size()));
    if (fresh) {
      paths.push_back(row.path);
      labels_of.emplace_back();
    }
    for (const auto& l : row.labels) {
      labels_of[it->second].insert(l);
      all_labels.insert(l);
    }
  }

  Dataset d;
  d.class_names.assign(all_labels.begin(), all_labels.end());
  std::unordered_map<std::string, int> col_of;
  for (int c = 0; c < d.n_classes(); ++c) col_of[d.class_names[c]] = c;

  const int n = static_cast<int>(paths.size());
  d.targets = MatF::Zero(n, d.n_classes());
  d.waves.resize(n);
  for (int i = 0; i < n; ++i) {
    const std::filesystem::path p(paths[i]);
    const std::string full = p.is_absolute() ? paths[i] : root + "/" + paths[i];
    d.waves[i] = load_wav(full);
    for (const auto& l : labels_of[i]) d.targets(i, col_of[l]) = 1.0f;
  }
  return d;
}

std::uint32_t crc32(const void* data, std::size_t size) {
  static const std::array<std::uint32_t, 256> table = [] {
    std::array<std::uint32_t, 256> t{};
    for (std::uint32_t i = 0; i < 256; ++i) {
      std::uint32_t c = i;
      for (int k = 0; k < 8; ++k) c = (c >> 1) ^ (0xEDB88320u & (~(c & 1u) + 1u));
      t[i] = c;
    }
    return t;
  }();
  std::uint32_t crc = 0xFFFFFFFFu;
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < size; ++i) crc = (crc >> 8) ^ table[(crc ^ p[i]) & 0xFFu];
  return crc ^ 0xFFFFFFFFu;
}

}  // namespace fftp
