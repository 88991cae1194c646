#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "fftp/common.hpp"
#include "fftp/patch.hpp"
#include "fftp/rng.hpp"

namespace fftp {

struct EncoderConfig {
  int depth = 4;
  int dim = 128;
  int heads = 4;
  double mlp_ratio = 4.0;
  int n_classes = 2;
  int max_tokens = 128;  // maximum sequence length including the class token

  int mlp_hidden() const { return static_cast<int>(std::llround(mlp_ratio * dim)); }
  int head_dim() const { return dim / heads; }
};

void validate(const EncoderConfig& cfg);

// Pre-norm transformer block parameters.
template <typename S>
struct LayerParams {
  Vec<S> ln1_g, ln1_b;
  Mat<S> w_qkv;  // D x 3D
  Vec<S> b_qkv;
  Mat<S> w_o;  // D x D
  Vec<S> b_o;
  Vec<S> ln2_g, ln2_b;
  Mat<S> w_fc1;  // D x H
  Vec<S> b_fc1;
  Mat<S> w_fc2;  // H x D
  Vec<S> b_fc2;
};

// All learnable tensors: class token, positional table, blocks, final norm,
// classification head.
template <typename S>
struct EncoderParams {
  EncoderConfig cfg;
  Vec<S> cls;
  Mat<S> pos;  // max_tokens x D
  std::vector<LayerParams<S>> layers;
  Vec<S> lnf_g, lnf_b;
  Mat<S> w_head;  // D x C
  Vec<S> b_head;

  static EncoderParams zeros(const EncoderConfig& cfg);
  // Weights from N(0, 0.02^2), biases zero, norm gains one. Draws happen in
  // tensor_views order so initialization is reproducible.
  static EncoderParams random_init(const EncoderConfig& cfg, Rng& rng);

  template <typename T>
  EncoderParams<T> cast() const;
};

// Named view over one parameter (or gradient) tensor; vectors appear as
// rows x 1. The order of tensor_views() defines the checkpoint layout and
// the optimizer state layout.
template <typename S>
struct TensorView {
  std::string name;
  S* data;
  std::int64_t rows;
  std::int64_t cols;
  std::int64_t size() const { return rows * cols; }
};

template <typename S>
std::vector<TensorView<S>> tensor_views(EncoderParams<S>& p);

// Head-averaged attention matrices, one per layer, rows = queries.
template <typename S>
using AttentionTrace = std::vector<Mat<S>>;

template <typename S>
struct LayerCache {
  Mat<S> x_in;
  Vec<S> ln1_mean, ln1_rstd;
  Mat<S> a1;
  Mat<S> qkv;
  std::vector<Mat<S>> probs;  // per-head softmax rows
  Mat<S> attn_concat;
  Mat<S> x_mid;
  Vec<S> ln2_mean, ln2_rstd;
  Mat<S> a2;
  Mat<S> f1;
  Mat<S> g1;
};

template <typename S>
struct ForwardCache {
  Mat<S> x0;
  std::vector<LayerCache<S>> layers;
  Mat<S> x_final;
  S lnf_mean = S(0);  // stats of the class row only; nothing else reaches the head
  S lnf_rstd = S(0);
};

template <typename S>
struct ForwardOutput {
  Vec<S> logits;
  AttentionTrace<S> trace;
};

// tokens: N' x D with the class token at row 0 and positions already added.
// Pass a cache to enable encoder_backward; pass capture_attention to fill
// the trace.
template <typename S>
ForwardOutput<S> encoder_forward(const Mat<S>& tokens, const EncoderParams<S>& p,
                                 bool capture_attention = false,
                                 ForwardCache<S>* cache = nullptr);

// Accumulates parameter gradients into `grads` (same shapes as p, caller
// zero-initializes) and returns d(loss)/d(tokens). Gradients for cls/pos are
// the caller's job: they fold into the input tokens, so
//   d_pos += d_tokens,  d_cls += d_tokens.row(0).
template <typename S>
Mat<S> encoder_backward(const ForwardCache<S>& cache, const EncoderParams<S>& p,
                        const Vec<S>& dlogits, EncoderParams<S>& grads);

// Residual-adjusted rollout: per layer Atil = rownorm(A + I), result
// Atil_L * ... * Atil_1. Row 0 is the class-token relevance vector.
template <typename S>
Mat<S> attention_rollout(const AttentionTrace<S>& trace);

// Paints token relevances (row 0 of the rollout, length n_f*n_t + 1) onto
// the spectrogram cells each patch covers; overlapping strides average;
// result scaled to [0, 1].
MatF rollout_heatmap(const VecF& relevance, const PatchConfig& cfg, const PatchGrid& grid, int F,
                     int T);

}  // namespace fftp
