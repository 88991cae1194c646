#include "fftp/flops.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <numeric>

#include "fftp/rng.hpp"

namespace fftp {

std::string to_string(FlopConvention c) {
  return c == FlopConvention::kMac2 ? "flops2" : "mac1";
}

FlopConvention flop_convention_from_string(const std::string& s) {
  if (s == "flops2") return FlopConvention::kMac2;
  if (s == "mac1") return FlopConvention::kMac1;
  throw InvalidArgument("unknown FLOP convention: " + s);
}

FlopsReport count_flops(const EncoderConfig& enc, const PatchConfig& patch, int F, int T,
                        int n_classes, bool with_class_token, FlopConvention conv) {
  validate(enc);
  if (n_classes < 1) throw InvalidArgument("count_flops: n_classes must be >= 1");
  const PatchGrid grid = patch_count(patch, F, T);

  FlopsReport r;
  r.patch = patch;
  r.convention = conv;
  r.n_patches = grid.count();
  r.tokens = grid.count() + (with_class_token ? 1 : 0);

  const double n = static_cast<double>(r.n_patches);
  const double nt = static_cast<double>(r.tokens);
  const double d = enc.dim;
  const double h = enc.mlp_hidden();
  const double p = static_cast<double>(patch.patch_f) * patch.patch_t;
  const double depth = enc.depth;

  r.patch_embed_flops = 2.0 * n * p * d;
  r.attn_linear_flops = depth * 8.0 * nt * d * d;
  r.attn_matmul_flops = depth * 4.0 * nt * nt * d;
  r.mlp_flops = depth * 4.0 * nt * d * h;
  r.head_flops = 2.0 * d * n_classes;
  if (conv == FlopConvention::kMac1) {
    r.patch_embed_flops /= 2.0;
    r.attn_linear_flops /= 2.0;
    r.attn_matmul_flops /= 2.0;
    r.mlp_flops /= 2.0;
    r.head_flops /= 2.0;
  }
  r.total_flops =
      r.patch_embed_flops + r.attn_linear_flops + r.attn_matmul_flops + r.mlp_flops + r.head_flops;
  return r;
}

LatencyStats measure_latency(const EncoderConfig& enc, const PatchConfig& patch, int F, int T,
                             int trials, std::uint64_t seed) {
  if (trials < 10) throw InvalidArgument("measure_latency: need at least 10 trials");
  const PatchGrid grid = patch_count(patch, F, T);
  (void)grid;

  Rng rng(Rng::derive(seed, 0xBE7CFULL));
  MelSpectrogram spec;
  spec.data.resize(F, T);
  for (std::int64_t i = 0; i < spec.data.size(); ++i)
    spec.data.data()[i] = static_cast<float>(rng.gaussian());

  EncoderParams<float> params = EncoderParams<float>::random_init(enc, rng);
  EmbeddingWeights emb;
  emb.w.resize(enc.dim, patch.patch_f * patch.patch_t);
  for (std::int64_t i = 0; i < emb.w.size(); ++i)
    emb.w.data()[i] = static_cast<float>(rng.gaussian(0.0, 0.02));
  emb.b = VecF::Zero(enc.dim);

  volatile float sink = 0.0f;
  auto run_once = [&]() {
    const MatF patches = extract_patches(spec, patch);
    const PatchGrid g = patch_count(patch, F, T);
    TokenSequence ts = embed(patches, g, emb);
    const TokenSequence seq = prepend_class_token(ts, params.cls, params.pos.topRows(ts.count() + 1));
    const ForwardOutput<float> out = encoder_forward(seq.tokens, params);
    sink = sink + out.logits[0];
  };

  for (int i = 0; i < 3; ++i) run_once();

  std::vector<double> ms(static_cast<std::size_t>(trials));
  for (int i = 0; i < trials; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    run_once();
    const auto t1 = std::chrono::steady_clock::now();
    ms[static_cast<std::size_t>(i)] =
        std::chrono::duration<double, std::milli>(t1 - t0).count();
  }
  std::sort(ms.begin(), ms.end());

  LatencyStats s;
  const std::size_t n = ms.size();
  s.median_ms = n % 2 ? ms[n / 2] : 0.5 * (ms[n / 2 - 1] + ms[n / 2]);
  s.mean_ms = std::accumulate(ms.begin(), ms.end(), 0.0) / static_cast<double>(n);
  std::size_t p95 = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n)));
  if (p95 < 1) p95 = 1;
  s.p95_ms = ms[p95 - 1];
  return s;
}

namespace {

void sort_reports(std::vector<FlopsReport>& reports) {
  if (reports.empty()) throw InvalidArgument("emit_table: no reports");
  std::sort(reports.begin(), reports.end(), [](const FlopsReport& a, const FlopsReport& b) {
    if (a.n_patches != b.n_patches) return a.n_patches < b.n_patches;
    const std::string am = to_string(a.patch.mode), bm = to_string(b.patch.mode);
    if (am != bm) return am < bm;
    if (a.patch.patch_f != b.patch.patch_f) return a.patch.patch_f < b.patch.patch_f;
    if (a.patch.patch_t != b.patch.patch_t) return a.patch.patch_t < b.patch.patch_t;
    if (a.patch.stride_f != b.patch.stride_f) return a.patch.stride_f < b.patch.stride_f;
    return a.patch.stride_t < b.patch.stride_t;
  });
}

std::string format_flops(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string emit_table_csv(std::vector<FlopsReport> reports) {
  sort_reports(reports);
  std::string out = "mode,patch_f,patch_t,stride_f,stride_t,patches,total_flops,latency_ms\n";
  char buf[256];
  for (const auto& r : reports) {
    std::string latency;
    if (r.latency_ms_median >= 0) {
      std::snprintf(buf, sizeof buf, "%.4f", r.latency_ms_median);
      latency = buf;
    }
    std::snprintf(buf, sizeof buf, "%s,%d,%d,%d,%d,%lld,%s,%s\n",
                  to_string(r.patch.mode).c_str(), r.patch.patch_f, r.patch.patch_t,
                  r.patch.stride_f, r.patch.stride_t, static_cast<long long>(r.n_patches),
                  format_flops(r.total_flops).c_str(), latency.c_str());
    out += buf;
  }
  return out;
}

std::string emit_table_text(std::vector<FlopsReport> reports) {
  sort_reports(reports);
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-8s %-9s %-9s %9s %14s %12s\n", "mode", "patch", "stride",
                "patches", "flops", "latency_ms");
  out += buf;
  for (const auto& r : reports) {
    char patch[32], stride[32];
    std::snprintf(patch, sizeof patch, "%dx%d", r.patch.patch_f, r.patch.patch_t);
    std::snprintf(stride, sizeof stride, "%dx%d", r.patch.stride_f, r.patch.stride_t);
    std::string latency = "-";
    if (r.latency_ms_median >= 0) {
      char lb[32];
      std::snprintf(lb, sizeof lb, "%.4f", r.latency_ms_median);
      latency = lb;
    }
    std::snprintf(buf, sizeof buf, "%-8s %-9s %-9s %9lld %14s %12s\n",
                  to_string(r.patch.mode).c_str(), patch, stride,
                  static_cast<long long>(r.n_patches), format_flops(r.total_flops).c_str(),
                  latency.c_str());
    out += buf;
  }
  return out;
}

}  // namespace fftp
