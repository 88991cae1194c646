#pragma once

#include <string>

#include "fftp/common.hpp"
#include "fftp/mel.hpp"

namespace fftp {

enum class PatchMode { kFftp, kSquare };

std::string to_string(PatchMode m);
PatchMode patch_mode_from_string(const std::string& s);

struct PatchConfig {
  int patch_f = 128;
  int patch_t = 50;
  int stride_f = 128;
  int stride_t = 10;
  PatchMode mode = PatchMode::kFftp;
};

struct PatchGrid {
  int n_f = 0;
  int n_t = 0;
  std::int64_t count() const { return static_cast<std::int64_t>(n_f) * n_t; }
};

// Window counts per axis: n = floor((extent - patch)/stride) + 1.
// In fftp mode the patch must span the full frequency axis (patch_f == F,
// stride_f == F). Throws GeometryError when a patch does not fit.
PatchGrid patch_count(const PatchConfig& cfg, int F, int T);

// Flattened patch vectors, one per row. Patch (i, j) covers rows
// [i*stride_f, i*stride_f + patch_f) and cols [j*stride_t, j*stride_t + patch_t);
// flattening is frequency-major (row-major within the patch) and patch
// ordering is time-fastest: row index = i*n_t + j.
MatF extract_patches(const MelSpectrogram& s, const PatchConfig& cfg);

struct EmbeddingWeights {
  MatF w;  // D x (patch_f * patch_t), flattened conv kernel
  VecF b;  // D

  int dim() const { return static_cast<int>(w.rows()); }
};

struct TokenSequence {
  MatF tokens;  // N' x D
  PatchGrid grid;
  bool has_class_token = false;

  int count() const { return static_cast<int>(tokens.rows()); }
  int dim() const { return static_cast<int>(tokens.cols()); }
};

// Per-patch affine map: token_i = w * patch_i + b.
TokenSequence embed(const MatF& patches, const PatchGrid& grid, const EmbeddingWeights& w);

// Prepends cls as token 0 and adds the positional table elementwise to all
// N+1 tokens. pos must have exactly N+1 rows.
TokenSequence prepend_class_token(const TokenSequence& ts, const VecF& cls, const MatF& pos);

}  // namespace fftp
