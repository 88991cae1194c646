#pragma once

#include <string>
#include <vector>

#include "fftp/common.hpp"

namespace fftp {

struct Waveform {
  std::vector<float> samples;  // amplitudes in [-1, 1]
  int sample_rate = 0;

  double duration_s() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

// Reads a RIFF/WAVE file holding 16-bit PCM, 1 or 2 channels. Stereo is
// averaged to mono; samples are scaled by 1/32768.
// Throws ParseError on a malformed container, UnsupportedError on any
// encoding other than PCM16 mono/stereo.
Waveform load_wav(const std::string& path);

// Writes mono PCM16 little-endian. Samples outside [-1, 1] are clamped;
// returns true if any sample was clamped.
bool save_wav(const std::string& path, const Waveform& w);

// Linear-interpolation resampler. Output length = round(len * target/source).
Waveform resample(const Waveform& w, int target_rate);

}  // namespace fftp
