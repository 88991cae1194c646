#include "fftp/patch.hpp"

namespace fftp {

std::string to_string(PatchMode m) { return m == PatchMode::kFftp ? "fftp" : "square"; }

PatchMode patch_mode_from_string(const std::string& s) {
  if (s == "fftp") return PatchMode::kFftp;
  if (s == "square") return PatchMode::kSquare;
  throw InvalidArgument("unknown patch mode: " + s);
}

PatchGrid patch_count(const PatchConfig& cfg, int F, int T) {
  if (cfg.patch_f < 1 || cfg.patch_t < 1 || cfg.stride_f < 1 || cfg.stride_t < 1)
    throw GeometryError("patch_count: patch and stride must be >= 1");
  if (cfg.patch_f > F || cfg.patch_t > T)
    throw GeometryError("patch_count: patch larger than the spectrogram");
  if (cfg.mode == PatchMode::kFftp && (cfg.patch_f != F || cfg.stride_f != F))
    throw GeometryError("patch_count: fftp mode requires patch_f == stride_f == F");
  PatchGrid g;
  g.n_f = (F - cfg.patch_f) / cfg.stride_f + 1;
  g.n_t = (T - cfg.patch_t) / cfg.stride_t + 1;
  return g;
}

MatF extract_patches(const MelSpectrogram& s, const PatchConfig& cfg) {
  const PatchGrid g = patch_count(cfg, s.F(), s.T());
  const int P = cfg.patch_f * cfg.patch_t;
  MatF out(g.count(), P);
  for (int i = 0; i < g.n_f; ++i) {
    for (int j = 0; j < g.n_t; ++j) {
      const int row = i * g.n_t + j;
      int k = 0;
      for (int f = 0; f < cfg.patch_f; ++f)
        for (int t = 0; t < cfg.patch_t; ++t)
          out(row, k++) = s.data(i * cfg.stride_f + f, j * cfg.stride_t + t);
    }
  }
  return out;
}

TokenSequence embed(const MatF& patches, const PatchGrid& grid, const EmbeddingWeights& w) {
  if (patches.cols() != w.w.cols())
    throw ShapeError("embed: patch length does not match kernel columns");
  if (patches.rows() != grid.count())
    throw ShapeError("embed: patch rows do not match the grid");
  if (w.b.size() != w.w.rows()) throw ShapeError("embed: bias size does not match kernel rows");
  TokenSequence ts;
  ts.tokens = patches * w.w.transpose();
  ts.tokens.rowwise() += w.b.transpose();
  ts.grid = grid;
  ts.has_class_token = false;
  return ts;
}

TokenSequence prepend_class_token(const TokenSequence& ts, const VecF& cls, const MatF& pos) {
  const int n = ts.count();
  if (n < 1) throw InvalidArgument("prepend_class_token: empty token sequence");
  if (ts.has_class_token) throw InvalidArgument("prepend_class_token: class token already present");
  const int d = ts.dim();
  if (cls.size() != d) throw ShapeError("prepend_class_token: class token dimension mismatch");
  if (pos.rows() != n + 1 || pos.cols() != d)
    throw ShapeError("prepend_class_token: positional table must be (N+1) x D");
  TokenSequence out;
  out.tokens.resize(n + 1, d);
  out.tokens.row(0) = cls.transpose();
  out.tokens.bottomRows(n) = ts.tokens;
  out.tokens += pos;
  out.grid = ts.grid;
  out.has_class_token = true;
  return out;
}

}  // namespace fftp
