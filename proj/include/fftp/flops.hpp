#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fftp/encoder.hpp"
#include "fftp/patch.hpp"

namespace fftp {

// Whether a multiply-accumulate counts as 2 FLOPs (the default) or 1.
// Ratios between configurations are identical under either convention.
enum class FlopConvention { kMac2, kMac1 };

std::string to_string(FlopConvention c);
FlopConvention flop_convention_from_string(const std::string& s);

struct FlopsReport {
  PatchConfig patch;
  std::int64_t n_patches = 0;  // N (grid cells)
  std::int64_t tokens = 0;     // N' (with the class token when present)
  double patch_embed_flops = 0;
  double attn_linear_flops = 0;  // QKV + output projections
  double attn_matmul_flops = 0;  // scores + weighted sum
  double mlp_flops = 0;
  double head_flops = 0;
  double total_flops = 0;
  double latency_ms_median = -1;  // -1 until measured
  double latency_ms_mean = -1;
  double latency_ms_p95 = -1;
  FlopConvention convention = FlopConvention::kMac2;
};

// Analytic forward cost. Per layer: 8*N'*D^2 linear projections,
// 4*N'^2*D attention matmuls, 4*N'*D*H MLP (H = mlp_hidden); patch embed
// 2*N*P*D; head 2*D*C. Softmax, norms, and bias adds are excluded.
// All terms halve under kMac1.
FlopsReport count_flops(const EncoderConfig& enc, const PatchConfig& patch, int F, int T,
                        int n_classes, bool with_class_token = true,
                        FlopConvention conv = FlopConvention::kMac2);

struct LatencyStats {
  double median_ms = 0;
  double mean_ms = 0;
  double p95_ms = 0;
};

// Batch-1 forward wall clock (patches -> embedding -> encoder) over `trials`
// runs after 3 warmup runs, on randomly initialized parameters.
// Requires trials >= 10.
LatencyStats measure_latency(const EncoderConfig& enc, const PatchConfig& patch, int F, int T,
                             int trials, std::uint64_t seed = 0);

// Reports sorted by patch count ascending.
// CSV columns: mode,patch_f,patch_t,stride_f,stride_t,patches,total_flops,latency_ms
// (latency empty when not measured).
std::string emit_table_csv(std::vector<FlopsReport> reports);
std::string emit_table_text(std::vector<FlopsReport> reports);

}  // namespace fftp
