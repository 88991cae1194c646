// Independent reference implementations the tests compare the library
// against. Everything here is written the slow, obvious way (plain loops,
// double precision, no shared helpers) so a bug in the library cannot hide
// in a mirrored bug here.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <vector>

#include "fftp/common.hpp"
#include "fftp/encoder.hpp"
#include "fftp/mel.hpp"
#include "fftp/patch.hpp"

namespace oracles {

// Valid window start offsets for a 1-d strided sliding window, by
// enumeration rather than closed form.
inline std::vector<int> window_starts(int total, int window, int stride) {
  std::vector<int> starts;
  for (int p = 0; p + window <= total; p += stride) starts.push_back(p);
  return starts;
}

// Strided 2-d convolution as four nested loops, the definition of the
// patch embedding: out(g, d) = sum_{u,v} W(d, u*pt+v) * spec(i*sf+u, j*st+v) + b(d)
// with g = i*n_t + j.
inline fftp::MatF conv_embed(const fftp::MatF& spec, const fftp::PatchConfig& cfg,
                             const fftp::MatF& W, const fftp::VecF& b) {
  const auto rows = window_starts(static_cast<int>(spec.rows()), cfg.patch_f, cfg.stride_f);
  const auto cols = window_starts(static_cast<int>(spec.cols()), cfg.patch_t, cfg.stride_t);
  const int D = static_cast<int>(W.rows());
  fftp::MatF out(static_cast<int>(rows.size() * cols.size()), D);
  int g = 0;
  for (int r0 : rows)
    for (int c0 : cols) {
      for (int d = 0; d < D; ++d) {
        double acc = b(d);
        for (int u = 0; u < cfg.patch_f; ++u)
          for (int v = 0; v < cfg.patch_t; ++v)
            acc += static_cast<double>(W(d, u * cfg.patch_t + v)) * spec(r0 + u, c0 + v);
        out(g, d) = static_cast<float>(acc);
      }
      ++g;
    }
  return out;
}

// Naive single-frame mel energies via an O(n^2) DFT; frame starts at
// `start` in the raw samples. Mirrors nothing from the library except the
// published formulas.
inline std::vector<double> mel_frame_dft(const std::vector<float>& samples, int start,
                                         const fftp::MelConfig& cfg) {
  const int n = cfg.frame_length_samples();
  const int n_fft = cfg.n_fft;
  const double pi = std::acos(-1.0);

  std::vector<double> frame(n_fft, 0.0);
  for (int i = 0; i < n; ++i) {
    const double w = 0.5 - 0.5 * std::cos(2.0 * pi * i / (n - 1));
    frame[i] = w * static_cast<double>(samples[start + i]);
  }

  const int n_bins = n_fft / 2 + 1;
  std::vector<double> power(n_bins);
  for (int k = 0; k < n_bins; ++k) {
    std::complex<double> acc(0.0, 0.0);
    for (int i = 0; i < n_fft; ++i)
      acc += frame[i] * std::exp(std::complex<double>(0.0, -2.0 * pi * k * i / n_fft));
    power[k] = std::norm(acc);
  }

  const auto hz_to_mel = [](double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); };
  const auto mel_to_hz = [](double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); };
  const double mel_high = hz_to_mel(cfg.sample_rate / 2.0);
  std::vector<double> mels(cfg.n_mels);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const double lo = mel_to_hz(mel_high * m / (cfg.n_mels + 1));
    const double mid = mel_to_hz(mel_high * (m + 1) / (cfg.n_mels + 1));
    const double hi = mel_to_hz(mel_high * (m + 2) / (cfg.n_mels + 1));
    double acc = 0.0;
    for (int k = 0; k < n_bins; ++k) {
      const double f = static_cast<double>(k) * cfg.sample_rate / n_fft;
      double w = 0.0;
      if (f > lo && f < mid)
        w = (hz_to_mel(f) - hz_to_mel(lo)) / (hz_to_mel(mid) - hz_to_mel(lo));
      else if (f >= mid && f < hi)
        w = (hz_to_mel(hi) - hz_to_mel(f)) / (hz_to_mel(hi) - hz_to_mel(mid));
      acc += w * power[k];
    }
    mels[m] = std::log(std::max(acc, cfg.log_floor));
  }
  return mels;
}

// Transformer encoder forward pass, re-derived with plain loops in double.
// Shapes follow EncoderParams; tokens already carry class token + positions.
inline std::vector<double> encoder_logits(const fftp::Mat<double>& tokens,
                                          const fftp::EncoderParams<double>& p) {
  const int N = static_cast<int>(tokens.rows());
  const int D = p.cfg.dim;
  const int H = p.cfg.mlp_hidden();
  const int heads = p.cfg.heads;
  const int dh = D / heads;

  std::vector<std::vector<double>> x(N, std::vector<double>(D));
  for (int i = 0; i < N; ++i)
    for (int d = 0; d < D; ++d) x[i][d] = tokens(i, d);

  const auto layer_norm = [&](const std::vector<double>& row, const fftp::Vec<double>& gain,
                              const fftp::Vec<double>& bias) {
    double mean = 0.0;
    for (double v : row) mean += v;
    mean /= D;
    double var = 0.0;
    for (double v : row) var += (v - mean) * (v - mean);
    var /= D;
    const double rstd = 1.0 / std::sqrt(var + 1e-5);
    std::vector<double> out(D);
    for (int d = 0; d < D; ++d) out[d] = (row[d] - mean) * rstd * gain(d) + bias(d);
    return out;
  };

  for (const auto& L : p.layers) {
    // attention
    std::vector<std::vector<double>> a1(N);
    for (int i = 0; i < N; ++i) a1[i] = layer_norm(x[i], L.ln1_g, L.ln1_b);

    std::vector<std::vector<double>> qkv(N, std::vector<double>(3 * D, 0.0));
    for (int i = 0; i < N; ++i)
      for (int c = 0; c < 3 * D; ++c) {
        double acc = L.b_qkv(c);
        for (int d = 0; d < D; ++d) acc += a1[i][d] * L.w_qkv(d, c);
        qkv[i][c] = acc;
      }

    std::vector<std::vector<double>> concat(N, std::vector<double>(D, 0.0));
    for (int h = 0; h < heads; ++h) {
      for (int i = 0; i < N; ++i) {
        std::vector<double> scores(N);
        double max_s = -1e300;
        for (int j = 0; j < N; ++j) {
          double acc = 0.0;
          for (int d = 0; d < dh; ++d)
            acc += qkv[i][h * dh + d] * qkv[j][D + h * dh + d];
          scores[j] = acc / std::sqrt(static_cast<double>(dh));
          max_s = std::max(max_s, scores[j]);
        }
        double z = 0.0;
        for (int j = 0; j < N; ++j) z += std::exp(scores[j] - max_s);
        for (int j = 0; j < N; ++j) {
          const double prob = std::exp(scores[j] - max_s) / z;
          for (int d = 0; d < dh; ++d)
            concat[i][h * dh + d] += prob * qkv[j][2 * D + h * dh + d];
        }
      }
    }

    for (int i = 0; i < N; ++i)
      for (int d = 0; d < D; ++d) {
        double acc = L.b_o(d);
        for (int c = 0; c < D; ++c) acc += concat[i][c] * L.w_o(c, d);
        x[i][d] += acc;
      }

    // MLP
    for (int i = 0; i < N; ++i) {
      const std::vector<double> a2 = layer_norm(x[i], L.ln2_g, L.ln2_b);
      std::vector<double> hbuf(H);
      for (int hh = 0; hh < H; ++hh) {
        double acc = L.b_fc1(hh);
        for (int d = 0; d < D; ++d) acc += a2[d] * L.w_fc1(d, hh);
        hbuf[hh] = 0.5 * acc * (1.0 + std::erf(acc / std::sqrt(2.0)));
      }
      for (int d = 0; d < D; ++d) {
        double acc = L.b_fc2(d);
        for (int hh = 0; hh < H; ++hh) acc += hbuf[hh] * L.w_fc2(hh, d);
        x[i][d] += acc;
      }
    }
  }

  const std::vector<double> y0 = layer_norm(x[0], p.lnf_g, p.lnf_b);
  std::vector<double> logits(p.cfg.n_classes);
  for (int c = 0; c < p.cfg.n_classes; ++c) {
    double acc = p.b_head(c);
    for (int d = 0; d < D; ++d) acc += y0[d] * p.w_head(d, c);
    logits[c] = acc;
  }
  return logits;
}

// Central-difference gradient of a scalar function at x.
inline double finite_diff(const std::function<double(double)>& f, double x, double eps) {
  return (f(x + eps) - f(x - eps)) / (2.0 * eps);
}

// Average precision from first principles: for each positive, precision at
// its rank counting how many positives score at or above it. Ties broken
// by ascending index, matching a stable descending sort.
inline double average_precision(const std::vector<double>& scores,
                                const std::vector<int>& labels) {
  const int n = static_cast<int>(scores.size());
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return scores[a] > scores[b]; });
  double ap = 0.0;
  int positives = 0, seen_pos = 0;
  for (int rank = 0; rank < n; ++rank) {
    if (labels[order[rank]] == 1) {
      ++seen_pos;
      ap += static_cast<double>(seen_pos) / (rank + 1);
    }
  }
  for (int l : labels) positives += l == 1;
  return positives ? ap / positives : 0.0;
}

}  // namespace oracles
