#include "fftp/wav.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

namespace fftp {

namespace {

std::uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

std::uint16_t read_u16(std::istream& in) {
  unsigned char b[2];
  in.read(reinterpret_cast<char*>(b), 2);
  return static_cast<std::uint16_t>(b[0] | (b[1] << 8));
}

void write_u32(std::ostream& out, std::uint32_t v) {
  char b[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
               static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
  out.write(b, 4);
}

void write_u16(std::ostream& out, std::uint16_t v) {
  char b[2] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff)};
  out.write(b, 2);
}

}  // namespace

Waveform load_wav(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);

  char tag[4];
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "RIFF", 4) != 0) throw ParseError(path + ": not a RIFF file");
  read_u32(in);  // riff size, unused
  in.read(tag, 4);
  if (!in || std::memcmp(tag, "WAVE", 4) != 0) throw ParseError(path + ": not a WAVE container");

  bool have_fmt = false;
  std::uint16_t channels = 0;
  std::uint32_t rate = 0;
  std::uint16_t bits = 0;
  std::uint16_t format = 0;
  std::vector<std::int16_t> pcm;
  bool have_data = false;

  while (in.read(tag, 4)) {
    std::uint32_t chunk_size = read_u32(in);
    if (!in) throw ParseError(path + ": truncated chunk header");
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (chunk_size < 16) throw ParseError(path + ": fmt chunk too small");
      format = read_u16(in);
      channels = read_u16(in);
      rate = read_u32(in);
      read_u32(in);  // byte rate
      read_u16(in);  // block align
      bits = read_u16(in);
      in.ignore(chunk_size - 16);
      have_fmt = true;
    } else if (std::memcmp(tag, "data", 4) == 0) {
      if (!have_fmt) throw ParseError(path + ": data chunk before fmt chunk");
      if (format != 1) throw UnsupportedError(path + ": only PCM encoding is supported");
      if (bits != 16) throw UnsupportedError(path + ": only 16-bit samples are supported");
      if (channels != 1 && channels != 2)
        throw UnsupportedError(path + ": only mono or stereo is supported");
      pcm.resize(chunk_size / 2);
      in.read(reinterpret_cast<char*>(pcm.data()), static_cast<std::streamsize>(pcm.size() * 2));
      if (!in) throw ParseError(path + ": truncated data chunk");
      have_data = true;
      if (chunk_size % 2) in.ignore(1);
    } else {
      in.ignore(chunk_size + (chunk_size % 2));  // chunks are word-aligned
      if (!in && !in.eof()) throw ParseError(path + ": truncated chunk");
    }
    if (have_data) break;
  }
  if (!have_fmt || !have_data) throw ParseError(path + ": missing fmt or data chunk");
  if (rate == 0) throw ParseError(path + ": zero sample rate");

  const std::size_t frames = pcm.size() / channels;
  if (frames == 0) throw ParseError(path + ": empty data chunk");

  Waveform w;
  w.sample_rate = static_cast<int>(rate);
  w.samples.resize(frames);
  constexpr float kScale = 1.0f / 32768.0f;
  if (channels == 1) {
    for (std::size_t i = 0; i < frames; ++i) w.samples[i] = pcm[i] * kScale;
  } else {
    for (std::size_t i = 0; i < frames; ++i) {
      const float sum = static_cast<float>(pcm[2 * i]) + static_cast<float>(pcm[2 * i + 1]);
      w.samples[i] = 0.5f * sum * kScale;
    }
  }
  return w;
}

bool save_wav(const std::string& path, const Waveform& w) {
  if (w.sample_rate <= 0) throw InvalidArgument("save_wav: sample_rate must be positive");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);

  const std::uint32_t n = static_cast<std::uint32_t>(w.samples.size());
  const std::uint32_t data_bytes = n * 2;
  out.write("RIFF", 4);
  write_u32(out, 36 + data_bytes);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  write_u32(out, 16);
  write_u16(out, 1);  // PCM
  write_u16(out, 1);  // mono
  write_u32(out, static_cast<std::uint32_t>(w.sample_rate));
  write_u32(out, static_cast<std::uint32_t>(w.sample_rate) * 2);
  write_u16(out, 2);
  write_u16(out, 16);
  out.write("data", 4);
  write_u32(out, data_bytes);

  bool clipped = false;
  for (float s : w.samples) {
    float x = s;
    if (x > 1.0f) {
      x = 1.0f;
      clipped = true;
    } else if (x < -1.0f) {
      x = -1.0f;
      clipped = true;
    }
    const long q = std::lround(static_cast<double>(x) * 32767.0);
    write_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(q)));
  }
  if (!out) throw IoError("short write to " + path);
  return clipped;
}

Waveform resample(const Waveform& w, int target_rate) {
  if (target_rate <= 0) throw InvalidArgument("resample: target_rate must be positive");
  if (w.sample_rate <= 0) throw InvalidArgument("resample: source rate must be positive");
  if (target_rate == w.sample_rate) return w;

  const std::size_t n = w.samples.size();
  const std::size_t out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(n) * target_rate / w.sample_rate));
  Waveform out;
  out.sample_rate = target_rate;
  out.samples.resize(out_len);
  const double step = static_cast<double>(w.sample_rate) / target_rate;
  for (std::size_t i = 0; i < out_len; ++i) {
    const double pos = i * step;
    std::size_t i0 = static_cast<std::size_t>(pos);
    if (i0 >= n - 1) {
      out.samples[i] = w.samples[n - 1];
      continue;
    }
    const double frac = pos - static_cast<double>(i0);
    out.samples[i] = static_cast<float>((1.0 - frac) * w.samples[i0] + frac * w.samples[i0 + 1]);
  }
  return out;
}

}  // namespace fftp
