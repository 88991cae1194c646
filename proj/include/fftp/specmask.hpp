#pragma once

#include <string>
#include <vector>

#include "fftp/common.hpp"
#include "fftp/mel.hpp"
#include "fftp/rng.hpp"

namespace fftp {

enum class MaskFill { kMean, kZero };

std::string to_string(MaskFill f);
MaskFill mask_fill_from_string(const std::string& s);

struct SpecMaskConfig {
  std::int64_t budget_area = 25600;  // target masked cells (A)
  int max_h = 128;
  int max_w = 128;
  double full_freq_prob = 0.7;
  MaskFill fill = MaskFill::kMean;
  int per_mask_attempts = 100;    // origin draws before the dimensions are redrawn
  int global_attempt_cap = 1000;  // placements + exhausted redraws before giving up
};

enum class MaskKind { kFullFrequency, kLocal };

std::string to_string(MaskKind k);

struct MaskEvent {
  int x = 0;  // row (frequency) origin
  int y = 0;  // col (time) origin
  int h = 0;
  int w = 0;
  MaskKind kind = MaskKind::kLocal;
};

struct MaskMap {
  MatU8 m;  // H x W occupancy, 1 = masked
  std::int64_t masked_area = 0;
};

struct SpecMaskResult {
  MelSpectrogram masked;
  MaskMap map;
  std::vector<MaskEvent> events;
  // True when the attempt cap ran out before the budget was met; the result
  // is then a valid partial masking.
  bool cap_exhausted = false;
};

// Budgeted non-overlapping masking: each mask is full-frequency (h = H) with
// probability full_freq_prob, otherwise a local rectangle; origins are
// rejection-sampled over fully unmasked positions. Mean fill uses the mean
// of the original spectrogram, computed before any masking.
SpecMaskResult apply_specmask(const MelSpectrogram& s, const SpecMaskConfig& cfg, Rng& rng);

// Baseline: n_t full-height time masks of width U{0..max_t} and n_f
// full-width frequency masks of height U{0..max_f}, filled with the
// spectrogram mean. Masks may overlap.
MelSpectrogram apply_specaugment(const MelSpectrogram& s, int max_t, int max_f, int n_t, int n_f,
                                 Rng& rng);

struct SpecAugmentConfig {
  int max_t = 400;
  int max_f = 5;
  int n_t = 2;
  int n_f = 2;
};

inline MelSpectrogram apply_specaugment(const MelSpectrogram& s, const SpecAugmentConfig& cfg,
                                        Rng& rng) {
  return apply_specaugment(s, cfg.max_t, cfg.max_f, cfg.n_t, cfg.n_f, rng);
}

// One "x,y,h,w,kind" row per event, with a header.
std::string events_to_csv(const std::vector<MaskEvent>& events);

}  // namespace fftp
