#include "fftp/specmask.hpp"

#include <sstream>

namespace fftp {

namespace {

void validate(const SpecMaskConfig& cfg, int H, int W) {
  const std::int64_t cells = static_cast<std::int64_t>(H) * W;
  if (cfg.budget_area < 0 || cfg.budget_area > cells)
    throw InvalidArgument("specmask: budget_area must be in [0, H*W]");
  if (cfg.max_h < 1 || cfg.max_h > H) throw InvalidArgument("specmask: max_h must be in [1, H]");
  if (cfg.max_w < 1 || cfg.max_w > W) throw InvalidArgument("specmask: max_w must be in [1, W]");
  if (cfg.full_freq_prob < 0.0 || cfg.full_freq_prob > 1.0)
    throw InvalidArgument("specmask: full_freq_prob must be in [0, 1]");
  if (cfg.per_mask_attempts < 1) throw InvalidArgument("specmask: per_mask_attempts must be >= 1");
  if (cfg.global_attempt_cap < 1)
    throw InvalidArgument("specmask: global_attempt_cap must be >= 1");
}

bool region_clear(const MatU8& m, int x, int y, int h, int w) {
  for (int i = x; i < x + h; ++i)
    for (int j = y; j < y + w; ++j)
      if (m(i, j)) return false;
  return true;
}

}  // namespace

std::string to_string(MaskFill f) { return f == MaskFill::kMean ? "mean" : "zero"; }

std::string to_string(MaskKind k) {
  return k == MaskKind::kFullFrequency ? "full_frequency" : "local";
}

MaskFill mask_fill_from_string(const std::string& s) {
  if (s == "mean") return MaskFill::kMean;
  if (s == "zero") return MaskFill::kZero;
  throw InvalidArgument("unknown mask fill: " + s);
}

SpecMaskResult apply_specmask(const MelSpectrogram& s, const SpecMaskConfig& cfg, Rng& rng) {
  const int H = s.F();
  const int W = s.T();
  validate(cfg, H, W);

  SpecMaskResult res;
  res.masked.data = s.data;
  res.map.m = MatU8::Zero(H, W);
  res.map.masked_area = 0;

  const float fill =
      cfg.fill == MaskFill::kMean ? static_cast<float>(s.data.cast<double>().mean()) : 0.0f;

  int attempts_used = 0;
  while (res.map.masked_area < cfg.budget_area) {
    if (attempts_used >= cfg.global_attempt_cap) {
      res.cap_exhausted = true;
      break;
    }
    ++attempts_used;

    const bool full = rng.uniform01() < cfg.full_freq_prob;
    const int h = full ? H : static_cast<int>(rng.uniform_int(1, cfg.max_h));
    const int w = static_cast<int>(rng.uniform_int(1, cfg.max_w));

    int x = -1, y = -1;
    for (int attempt = 0; attempt < cfg.per_mask_attempts; ++attempt) {
      const int cx = static_cast<int>(rng.uniform_int(0, H - h));
      const int cy = static_cast<int>(rng.uniform_int(0, W - w));
      if (region_clear(res.map.m, cx, cy, h, w)) {
        x = cx;
        y = cy;
        break;
      }
    }
    if (x < 0) continue;  // redraw dimensions

    res.masked.data.block(x, y, h, w).setConstant(fill);
    res.map.m.block(x, y, h, w).setConstant(1);
    res.map.masked_area += static_cast<std::int64_t>(h) * w;
    res.events.push_back({x, y, h, w, full ? MaskKind::kFullFrequency : MaskKind::kLocal});
  }
  return res;
}

MelSpectrogram apply_specaugment(const MelSpectrogram& s, int max_t, int max_f, int n_t, int n_f,
                                 Rng& rng) {
  const int F = s.F();
  const int T = s.T();
  if (max_t < 0 || max_t > T) throw InvalidArgument("specaugment: max_t must be in [0, T]");
  if (max_f < 0 || max_f > F) throw InvalidArgument("specaugment: max_f must be in [0, F]");
  if (n_t < 0 || n_f < 0) throw InvalidArgument("specaugment: mask counts must be >= 0");

  MelSpectrogram out;
  out.data = s.data;
  const float fill = static_cast<float>(s.data.cast<double>().mean());

  for (int i = 0; i < n_t; ++i) {
    const int width = static_cast<int>(rng.uniform_int(0, max_t));
    if (width == 0) continue;
    const int t0 = static_cast<int>(rng.uniform_int(0, T - width));
    out.data.middleCols(t0, width).setConstant(fill);
  }
  for (int i = 0; i < n_f; ++i) {
    const int height = static_cast<int>(rng.uniform_int(0, max_f));
    if (height == 0) continue;
    const int f0 = static_cast<int>(rng.uniform_int(0, F - height));
    out.data.middleRows(f0, height).setConstant(fill);
  }
  return out;
}

std::string events_to_csv(const std::vector<MaskEvent>& events) {
  std::ostringstream os;
  os << "x,y,h,w,kind\n";
  for (const auto& e : events) {
    os << e.x << ',' << e.y << ',' << e.h << ',' << e.w << ','
       << to_string(e.kind) << '\n';
  }
  return os.str();
}

}  // namespace fftp
