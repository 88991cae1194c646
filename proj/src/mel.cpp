#include "fftp/mel.hpp"

#include <cmath>
#include <complex>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace fftp {

namespace {

constexpr double kPi = 3.14159265358979323846;

// In-place iterative radix-2 FFT.
void fft(std::vector<std::complex<double>>& a) {
  const std::size_t n = a.size();
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = -2.0 * kPi / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wlen;
      }
    }
  }
}

bool is_pow2(int x) { return x > 0 && (x & (x - 1)) == 0; }

void validate(const MelConfig& cfg) {
  if (cfg.sample_rate <= 0) throw InvalidArgument("mel: sample_rate must be positive");
  if (cfg.n_mels < 1) throw InvalidArgument("mel: n_mels must be >= 1");
  if (cfg.frame_length_ms < cfg.frame_shift_ms)
    throw InvalidArgument("mel: frame_length_ms must be >= frame_shift_ms");
  if (cfg.frame_shift_samples() < 1) throw InvalidArgument("mel: frame shift under one sample");
  if (!is_pow2(cfg.n_fft)) throw InvalidArgument("mel: n_fft must be a power of two");
  if (cfg.n_fft < cfg.frame_length_samples())
    throw InvalidArgument("mel: n_fft smaller than the frame length");
  if (cfg.log_floor <= 0) throw InvalidArgument("mel: log_floor must be positive");
}

}  // namespace

double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }

double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

MatF mel_filterbank(int n_mels, int n_fft, double sample_rate) {
  const int n_bins = n_fft / 2 + 1;
  const double mel_high = hz_to_mel(sample_rate / 2.0);
  // n_mels + 2 equally spaced edge points in mel space over [0, nyquist]
  std::vector<double> edges(n_mels + 2);
  for (int i = 0; i < n_mels + 2; ++i) edges[i] = mel_high * i / (n_mels + 1);

  MatF fb = MatF::Zero(n_mels, n_bins);
  const double bin_hz = sample_rate / static_cast<double>(n_fft);
  for (int m = 0; m < n_mels; ++m) {
    const double left = edges[m], center = edges[m + 1], right = edges[m + 2];
    for (int k = 0; k < n_bins; ++k) {
      const double mel_k = hz_to_mel(k * bin_hz);
      double w = 0.0;
      if (mel_k > left && mel_k < right) {
        w = mel_k <= center ? (mel_k - left) / (center - left)
                            : (right - mel_k) / (right - center);
      }
      fb(m, k) = static_cast<float>(w);
    }
  }
  return fb;
}

std::vector<double> mel_center_frequencies(int n_mels, double sample_rate) {
  const double mel_high = hz_to_mel(sample_rate / 2.0);
  std::vector<double> centers(n_mels);
  for (int m = 0; m < n_mels; ++m) centers[m] = mel_to_hz(mel_high * (m + 1) / (n_mels + 1));
  return centers;
}

std::int64_t num_frames(std::int64_t n_samples, const MelConfig& cfg) {
  const int frame_len = cfg.frame_length_samples();
  if (n_samples < frame_len) return 0;
  return (n_samples - frame_len) / cfg.frame_shift_samples() + 1;
}

MelSpectrogram log_mel(const Waveform& w, const MelConfig& cfg) {
  validate(cfg);
  if (w.sample_rate != cfg.sample_rate)
    throw InvalidArgument("log_mel: waveform rate does not match MelConfig.sample_rate");
  const int frame_len = cfg.frame_length_samples();
  const int shift = cfg.frame_shift_samples();
  const std::int64_t n = static_cast<std::int64_t>(w.samples.size());
  if (n < frame_len) throw TooShortError("log_mel: waveform shorter than one frame");

  const int T = static_cast<int>((n - frame_len) / shift + 1);
  const int F = cfg.n_mels;
  const int n_bins = cfg.n_fft / 2 + 1;

  std::vector<double> window(frame_len);
  for (int i = 0; i < frame_len; ++i)
    window[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * i / (frame_len - 1));

  const MatF fb = mel_filterbank(F, cfg.n_fft, cfg.sample_rate);
  Eigen::MatrixXd fbd = fb.cast<double>();

  MelSpectrogram out;
  out.data.resize(F, T);

  std::vector<std::complex<double>> buf(cfg.n_fft);
  Eigen::VectorXd power(n_bins);
  for (int t = 0; t < T; ++t) {
    const float* src = w.samples.data() + static_cast<std::int64_t>(t) * shift;
    for (int i = 0; i < frame_len; ++i) buf[i] = {src[i] * window[i], 0.0};
    for (int i = frame_len; i < cfg.n_fft; ++i) buf[i] = {0.0, 0.0};
    fft(buf);
    for (int k = 0; k < n_bins; ++k) power[k] = std::norm(buf[k]);
    Eigen::VectorXd mel = fbd * power;
    for (int m = 0; m < F; ++m) {
      const double e = mel[m] > cfg.log_floor ? mel[m] : cfg.log_floor;
      out.data(m, t) = static_cast<float>(std::log(e));
    }
  }
  return out;
}

MelSpectrogram pad_or_trim(const MelSpectrogram& s, int target_T, float pad_value) {
  if (target_T < 1) throw InvalidArgument("pad_or_trim: target_T must be >= 1");
  MelSpectrogram out;
  const int T = s.T();
  if (T == target_T) {
    out.data = s.data;
  } else if (T > target_T) {
    out.data = s.data.leftCols(target_T);
  } else {
    out.data.resize(s.F(), target_T);
    out.data.leftCols(T) = s.data;
    out.data.rightCols(target_T - T).setConstant(pad_value);
  }
  return out;
}

void write_mels(const std::string& path, const MelSpectrogram& s) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out.write("MELS", 4);
  const std::uint32_t F = static_cast<std::uint32_t>(s.F());
  const std::uint32_t T = static_cast<std::uint32_t>(s.T());
  auto put_u32 = [&](std::uint32_t v) {
    char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                 static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(b, 4);
  };
  put_u32(F);
  put_u32(T);
  std::vector<float> row(s.T());
  for (int m = 0; m < s.F(); ++m) {
    for (int t = 0; t < s.T(); ++t) row[t] = s.data(m, t);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
  if (!out) throw IoError("short write to " + path);
}

MelSpectrogram read_mels(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "MELS", 4) != 0) throw ParseError(path + ": bad magic");
  auto get_u32 = [&]() -> std::uint32_t {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    return static_cast<std::uint32_t>(b[0]) | (b[1] << 8) | (b[2] << 16) |
           (static_cast<std::uint32_t>(b[3]) << 24);
  };
  const std::uint32_t F = get_u32();
  const std::uint32_t T = get_u32();
  if (!in || F < 1 || T < 1) throw ParseError(path + ": bad header");
  MelSpectrogram s;
  s.data.resize(F, T);
  std::vector<float> row(T);
  for (std::uint32_t m = 0; m < F; ++m) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!in) throw ParseError(path + ": truncated payload");
    for (std::uint32_t t = 0; t < T; ++t) s.data(m, t) = row[t];
  }
  return s;
}

}  // namespace fftp
