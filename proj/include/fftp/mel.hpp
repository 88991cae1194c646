#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fftp/common.hpp"
#include "fftp/wav.hpp"

namespace fftp {

enum class WindowType { kHanning };
enum class MelScale { kHtk };

struct MelConfig {
  int sample_rate = 16000;
  int n_mels = 128;
  double frame_shift_ms = 10.0;
  double frame_length_ms = 25.0;
  // FFT length; must be a power of two >= the frame length in samples.
  // 1024 keeps every mel triangle wider than one FFT bin at the default
  // geometry, so no filter row is empty.
  int n_fft = 1024;
  WindowType window = WindowType::kHanning;
  MelScale mel_scale = MelScale::kHtk;
  double log_floor = 1e-10;

  int frame_length_samples() const {
    return static_cast<int>(std::llround(frame_length_ms * sample_rate / 1000.0));
  }
  int frame_shift_samples() const {
    return static_cast<int>(std::llround(frame_shift_ms * sample_rate / 1000.0));
  }
};

// F x T matrix of natural-log mel energies; rows are mel bins.
struct MelSpectrogram {
  MatF data;

  int F() const { return static_cast<int>(data.rows()); }
  int T() const { return static_cast<int>(data.cols()); }
};

double hz_to_mel(double hz);
double mel_to_hz(double mel);

// Triangular HTK-mel filterbank over [0, sample_rate/2].
// Rows: n_mels, cols: n_fft/2 + 1. Every row is nonnegative with positive sum.
MatF mel_filterbank(int n_mels, int n_fft, double sample_rate);

// Center frequency (Hz) of each mel filter, for locating tones in tests
// and synthesized data.
std::vector<double> mel_center_frequencies(int n_mels, double sample_rate);

// Frames produced by snip-edges framing of n_samples, i.e.
// floor((n - frame_length)/frame_shift) + 1; 0 if shorter than one frame.
std::int64_t num_frames(std::int64_t n_samples, const MelConfig& cfg);

// Snip-edges framing, Hanning window, power spectrum, mel filterbank,
// natural log with floor. T = floor((len - frame_length)/frame_shift) + 1.
// Throws TooShortError if the waveform is shorter than one frame.
MelSpectrogram log_mel(const Waveform& w, const MelConfig& cfg);

// Right-truncates or right-pads with pad_value to exactly target_T frames.
MelSpectrogram pad_or_trim(const MelSpectrogram& s, int target_T, float pad_value);

// Spectrogram cache: magic "MELS", u32 LE F, u32 LE T, then F*T float32 LE
// row-major (rows = mel bins).
void write_mels(const std::string& path, const MelSpectrogram& s);
MelSpectrogram read_mels(const std::string& path);

}  // namespace fftp
