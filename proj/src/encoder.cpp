#include "fftp/encoder.hpp"

namespace fftp {

void validate(const EncoderConfig& cfg) {
  if (cfg.depth < 1) throw InvalidArgument("encoder: depth must be >= 1");
  if (cfg.dim < 1) throw InvalidArgument("encoder: dim must be >= 1");
  if (cfg.heads < 1 || cfg.dim % cfg.heads != 0)
    throw InvalidArgument("encoder: dim must be divisible by heads");
  if (cfg.mlp_hidden() < 1) throw InvalidArgument("encoder: mlp hidden size must be >= 1");
  if (cfg.n_classes < 1) throw InvalidArgument("encoder: n_classes must be >= 1");
  if (cfg.max_tokens < 2) throw InvalidArgument("encoder: max_tokens must be >= 2");
}

namespace {

template <typename S>
void layer_norm_rows(const Mat<S>& x, const Vec<S>& g, const Vec<S>& b, Mat<S>& out, Vec<S>& mean,
                     Vec<S>& rstd) {
  const S eps = S(1e-5);
  const auto m = x.rows();
  const auto d = x.cols();
  out.resize(m, d);
  mean.resize(m);
  rstd.resize(m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const S mu = x.row(i).mean();
    const S var = (x.row(i).array() - mu).square().sum() / S(d);
    const S r = S(1) / std::sqrt(var + eps);
    mean[i] = mu;
    rstd[i] = r;
    out.row(i) =
        ((x.row(i).array() - mu) * r * g.transpose().array() + b.transpose().array()).matrix();
  }
}

// Returns dx for one row; accumulates gamma/beta gradients.
template <typename S>
Eigen::Matrix<S, 1, Eigen::Dynamic> layer_norm_backward_row(
    const Eigen::Matrix<S, 1, Eigen::Dynamic>& dy, const Eigen::Matrix<S, 1, Eigen::Dynamic>& x,
    S mu, S r, const Vec<S>& g, Vec<S>& dg, Vec<S>& db) {
  Eigen::Array<S, 1, Eigen::Dynamic> xhat = (x.array() - mu) * r;
  Eigen::Array<S, 1, Eigen::Dynamic> dxhat = dy.array() * g.transpose().array();
  const S m1 = dxhat.mean();
  const S m2 = (dxhat * xhat).mean();
  dg += (dy.array() * xhat).matrix().transpose();
  db += dy.transpose();
  return (r * (dxhat - m1 - xhat * m2)).matrix();
}

template <typename S>
Mat<S> row_softmax(const Mat<S>& x) {
  Mat<S> p(x.rows(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const S mx = x.row(i).maxCoeff();
    Eigen::Array<S, 1, Eigen::Dynamic> e = (x.row(i).array() - mx).exp();
    p.row(i) = (e / e.sum()).matrix();
  }
  return p;
}

template <typename S>
S gelu_scalar(S x) {
  return S(0.5) * x * (S(1) + std::erf(x * S(0.7071067811865475)));
}

template <typename S>
S gelu_grad_scalar(S x) {
  const S cdf = S(0.5) * (S(1) + std::erf(x * S(0.7071067811865475)));
  const S pdf = std::exp(S(-0.5) * x * x) * S(0.3989422804014327);
  return cdf + x * pdf;
}

}  // namespace

template <typename S>
EncoderParams<S> EncoderParams<S>::zeros(const EncoderConfig& cfg) {
  validate(cfg);
  const int d = cfg.dim;
  const int h = cfg.mlp_hidden();
  EncoderParams<S> p;
  p.cfg = cfg;
  p.cls = Vec<S>::Zero(d);
  p.pos = Mat<S>::Zero(cfg.max_tokens, d);
  p.layers.resize(cfg.depth);
  for (auto& l : p.layers) {
    l.ln1_g = Vec<S>::Zero(d);
    l.ln1_b = Vec<S>::Zero(d);
    l.w_qkv = Mat<S>::Zero(d, 3 * d);
    l.b_qkv = Vec<S>::Zero(3 * d);
    l.w_o = Mat<S>::Zero(d, d);
    l.b_o = Vec<S>::Zero(d);
    l.ln2_g = Vec<S>::Zero(d);
    l.ln2_b = Vec<S>::Zero(d);
    l.w_fc1 = Mat<S>::Zero(d, h);
    l.b_fc1 = Vec<S>::Zero(h);
    l.w_fc2 = Mat<S>::Zero(h, d);
    l.b_fc2 = Vec<S>::Zero(d);
  }
  p.lnf_g = Vec<S>::Zero(d);
  p.lnf_b = Vec<S>::Zero(d);
  p.w_head = Mat<S>::Zero(d, cfg.n_classes);
  p.b_head = Vec<S>::Zero(cfg.n_classes);
  return p;
}

template <typename S>
EncoderParams<S> EncoderParams<S>::random_init(const EncoderConfig& cfg, Rng& rng) {
  EncoderParams<S> p = zeros(cfg);
  constexpr double kStd = 0.02;
  auto fill = [&rng](auto& w) {
    S* data = w.data();
    for (std::int64_t i = 0; i < w.size(); ++i)
      data[i] = static_cast<S>(rng.gaussian(0.0, kStd));
  };
  fill(p.cls);
  fill(p.pos);
  for (auto& l : p.layers) {
    l.ln1_g.setOnes();
    fill(l.w_qkv);
    fill(l.w_o);
    l.ln2_g.setOnes();
    fill(l.w_fc1);
    fill(l.w_fc2);
  }
  p.lnf_g.setOnes();
  fill(p.w_head);
  return p;
}

template <typename S>
template <typename T>
EncoderParams<T> EncoderParams<S>::cast() const {
  EncoderParams<T> q = EncoderParams<T>::zeros(cfg);
  auto& self = const_cast<EncoderParams<S>&>(*this);
  auto src = tensor_views(self);
  auto dst = tensor_views(q);
  for (std::size_t i = 0; i < src.size(); ++i)
    for (std::int64_t j = 0; j < src[i].size(); ++j)
      dst[i].data[j] = static_cast<T>(src[i].data[j]);
  return q;
}

template <typename S>
std::vector<TensorView<S>> tensor_views(EncoderParams<S>& p) {
  std::vector<TensorView<S>> out;
  auto add_vec = [&](const std::string& name, Vec<S>& v) {
    out.push_back({name, v.data(), v.size(), 1});
  };
  auto add_mat = [&](const std::string& name, Mat<S>& m) {
    out.push_back({name, m.data(), m.rows(), m.cols()});
  };
  add_vec("cls", p.cls);
  add_mat("pos", p.pos);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    const std::string b = "layers." + std::to_string(i) + ".";
    auto& l = p.layers[i];
    add_vec(b + "ln1_g", l.ln1_g);
    add_vec(b + "ln1_b", l.ln1_b);
    add_mat(b + "w_qkv", l.w_qkv);
    add_vec(b + "b_qkv", l.b_qkv);
    add_mat(b + "w_o", l.w_o);
    add_vec(b + "b_o", l.b_o);
    add_vec(b + "ln2_g", l.ln2_g);
    add_vec(b + "ln2_b", l.ln2_b);
    add_mat(b + "w_fc1", l.w_fc1);
    add_vec(b + "b_fc1", l.b_fc1);
    add_mat(b + "w_fc2", l.w_fc2);
    add_vec(b + "b_fc2", l.b_fc2);
  }
  add_vec("lnf_g", p.lnf_g);
  add_vec("lnf_b", p.lnf_b);
  add_mat("w_head", p.w_head);
  add_vec("b_head", p.b_head);
  return out;
}

template <typename S>
ForwardOutput<S> encoder_forward(const Mat<S>& tokens, const EncoderParams<S>& p,
                                 bool capture_attention, ForwardCache<S>* cache) {
  const auto& cfg = p.cfg;
  const int m = static_cast<int>(tokens.rows());
  const int d = cfg.dim;
  if (tokens.cols() != d) throw ShapeError("encoder_forward: token dimension mismatch");
  if (m < 1) throw ShapeError("encoder_forward: empty token sequence");
  if (m > cfg.max_tokens) throw ShapeError("encoder_forward: sequence exceeds max_tokens");
  const int heads = cfg.heads;
  const int dh = cfg.head_dim();
  const S scale = S(1) / std::sqrt(S(dh));

  ForwardOutput<S> out;
  if (capture_attention) out.trace.reserve(cfg.depth);
  if (cache) {
    cache->x0 = tokens;
    cache->layers.assign(cfg.depth, {});
  }

  Mat<S> x = tokens;
  Vec<S> ln_mean, ln_rstd;
  Mat<S> a1, a2;
  for (int li = 0; li < cfg.depth; ++li) {
    const auto& l = p.layers[li];
    LayerCache<S>* lc = cache ? &cache->layers[li] : nullptr;
    if (lc) lc->x_in = x;

    layer_norm_rows(x, l.ln1_g, l.ln1_b, a1, ln_mean, ln_rstd);
    if (lc) {
      lc->ln1_mean = ln_mean;
      lc->ln1_rstd = ln_rstd;
      lc->a1 = a1;
    }

    Mat<S> qkv = a1 * l.w_qkv;
    qkv.rowwise() += l.b_qkv.transpose();
    if (lc) lc->qkv = qkv;

    Mat<S> concat(m, d);
    Mat<S> avg;
    if (capture_attention) avg = Mat<S>::Zero(m, m);
    for (int h = 0; h < heads; ++h) {
      auto q = qkv.middleCols(h * dh, dh);
      auto k = qkv.middleCols(d + h * dh, dh);
      auto v = qkv.middleCols(2 * d + h * dh, dh);
      Mat<S> scores = (q * k.transpose()) * scale;
      Mat<S> probs = row_softmax(scores);
      concat.middleCols(h * dh, dh).noalias() = probs * v;
      if (capture_attention) avg += probs;
      if (lc) lc->probs.push_back(std::move(probs));
    }
    if (capture_attention) out.trace.push_back(avg / S(heads));
    if (lc) lc->attn_concat = concat;

    Mat<S> attn_out = concat * l.w_o;
    attn_out.rowwise() += l.b_o.transpose();
    x += attn_out;
    if (lc) lc->x_mid = x;

    layer_norm_rows(x, l.ln2_g, l.ln2_b, a2, ln_mean, ln_rstd);
    if (lc) {
      lc->ln2_mean = ln_mean;
      lc->ln2_rstd = ln_rstd;
      lc->a2 = a2;
    }

    Mat<S> f1 = a2 * l.w_fc1;
    f1.rowwise() += l.b_fc1.transpose();
    Mat<S> g1 = f1.unaryExpr([](S t) { return gelu_scalar(t); });
    if (lc) {
      lc->f1 = f1;
      lc->g1 = g1;
    }
    Mat<S> f2 = g1 * l.w_fc2;
    f2.rowwise() += l.b_fc2.transpose();
    x += f2;
  }

  if (cache) cache->x_final = x;

  // Final norm of the class row feeds the head; other rows stop here.
  const S mu = x.row(0).mean();
  const S var = (x.row(0).array() - mu).square().sum() / S(d);
  const S r = S(1) / std::sqrt(var + S(1e-5));
  if (cache) {
    cache->lnf_mean = mu;
    cache->lnf_rstd = r;
  }
  Eigen::Matrix<S, 1, Eigen::Dynamic> y0 =
      ((x.row(0).array() - mu) * r * p.lnf_g.transpose().array() + p.lnf_b.transpose().array())
          .matrix();
  out.logits = (y0 * p.w_head).transpose() + p.b_head;
  return out;
}

template <typename S>
Mat<S> encoder_backward(const ForwardCache<S>& cache, const EncoderParams<S>& p,
                        const Vec<S>& dlogits, EncoderParams<S>& grads) {
  const auto& cfg = p.cfg;
  const int m = static_cast<int>(cache.x0.rows());
  const int d = cfg.dim;
  if (dlogits.size() != cfg.n_classes) throw ShapeError("encoder_backward: dlogits size mismatch");
  const int heads = cfg.heads;
  const int dh = cfg.head_dim();
  const S scale = S(1) / std::sqrt(S(dh));

  // Head and final norm (class row only).
  const S mu = cache.lnf_mean;
  const S r = cache.lnf_rstd;
  Eigen::Matrix<S, 1, Eigen::Dynamic> y0 =
      ((cache.x_final.row(0).array() - mu) * r * p.lnf_g.transpose().array() +
       p.lnf_b.transpose().array())
          .matrix();
  grads.w_head += y0.transpose() * dlogits.transpose();
  grads.b_head += dlogits;
  Eigen::Matrix<S, 1, Eigen::Dynamic> dy0 = (p.w_head * dlogits).transpose();

  Mat<S> dx = Mat<S>::Zero(m, d);
  dx.row(0) = layer_norm_backward_row<S>(dy0, cache.x_final.row(0), mu, r, p.lnf_g, grads.lnf_g,
                                         grads.lnf_b);

  for (int li = cfg.depth - 1; li >= 0; --li) {
    const auto& l = p.layers[li];
    const auto& lc = cache.layers[li];
    auto& gl = grads.layers[li];

    // MLP branch: x_out = x_mid + gelu(ln2(x_mid) W1 + b1) W2 + b2
    Mat<S> d_f2 = dx;
    gl.w_fc2 += lc.g1.transpose() * d_f2;
    gl.b_fc2 += d_f2.colwise().sum().transpose();
    Mat<S> d_g1 = d_f2 * l.w_fc2.transpose();
    Mat<S> d_f1 =
        (d_g1.array() * lc.f1.unaryExpr([](S t) { return gelu_grad_scalar(t); }).array())
            .matrix();
    gl.w_fc1 += lc.a2.transpose() * d_f1;
    gl.b_fc1 += d_f1.colwise().sum().transpose();
    Mat<S> d_a2 = d_f1 * l.w_fc1.transpose();

    Mat<S> d_x_mid = dx;  // residual path
    for (int i = 0; i < m; ++i)
      d_x_mid.row(i) += layer_norm_backward_row<S>(d_a2.row(i), lc.x_mid.row(i), lc.ln2_mean[i],
                                                   lc.ln2_rstd[i], l.ln2_g, gl.ln2_g, gl.ln2_b);

    // Attention branch: x_mid = x_in + (heads(ln1(x_in))) W_o + b_o
    gl.w_o += lc.attn_concat.transpose() * d_x_mid;
    gl.b_o += d_x_mid.colwise().sum().transpose();
    Mat<S> d_concat = d_x_mid * l.w_o.transpose();

    Mat<S> d_qkv = Mat<S>::Zero(m, 3 * d);
    for (int h = 0; h < heads; ++h) {
      auto q = lc.qkv.middleCols(h * dh, dh);
      auto k = lc.qkv.middleCols(d + h * dh, dh);
      auto v = lc.qkv.middleCols(2 * d + h * dh, dh);
      const Mat<S>& probs = lc.probs[h];
      auto d_o = d_concat.middleCols(h * dh, dh);

      Mat<S> d_probs = d_o * v.transpose();
      d_qkv.middleCols(2 * d + h * dh, dh) += probs.transpose() * d_o;

      Mat<S> d_scores(m, m);
      for (int i = 0; i < m; ++i) {
        const S dot = d_probs.row(i).dot(probs.row(i));
        d_scores.row(i) = (probs.row(i).array() * (d_probs.row(i).array() - dot)).matrix();
      }
      d_scores *= scale;
      d_qkv.middleCols(h * dh, dh) += d_scores * k;
      d_qkv.middleCols(d + h * dh, dh) += d_scores.transpose() * q;
    }

    gl.w_qkv += lc.a1.transpose() * d_qkv;
    gl.b_qkv += d_qkv.colwise().sum().transpose();
    Mat<S> d_a1 = d_qkv * l.w_qkv.transpose();

    dx = d_x_mid;  // residual into the block input
    for (int i = 0; i < m; ++i)
      dx.row(i) += layer_norm_backward_row<S>(d_a1.row(i), lc.x_in.row(i), lc.ln1_mean[i],
                                              lc.ln1_rstd[i], l.ln1_g, gl.ln1_g, gl.ln1_b);
  }
  return dx;
}

template <typename S>
Mat<S> attention_rollout(const AttentionTrace<S>& trace) {
  if (trace.empty()) throw InvalidArgument("attention_rollout: empty trace");
  const auto n = trace[0].rows();
  Mat<S> rollout = Mat<S>::Identity(n, n);
  for (const auto& a : trace) {
    if (a.rows() != n || a.cols() != n) throw ShapeError("attention_rollout: ragged trace");
    Mat<S> adj = a + Mat<S>::Identity(n, n);
    for (Eigen::Index i = 0; i < n; ++i) adj.row(i) /= adj.row(i).sum();
    rollout = adj * rollout;
  }
  return rollout;
}

MatF rollout_heatmap(const VecF& relevance, const PatchConfig& cfg, const PatchGrid& grid, int F,
                     int T) {
  if (relevance.size() != grid.count() + 1)
    throw ShapeError("rollout_heatmap: relevance length must be n_f*n_t + 1");
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(F, T);
  Eigen::MatrixXd cnt = Eigen::MatrixXd::Zero(F, T);
  for (int i = 0; i < grid.n_f; ++i) {
    for (int j = 0; j < grid.n_t; ++j) {
      const double rel = relevance[1 + i * grid.n_t + j];
      sum.block(i * cfg.stride_f, j * cfg.stride_t, cfg.patch_f, cfg.patch_t).array() += rel;
      cnt.block(i * cfg.stride_f, j * cfg.stride_t, cfg.patch_f, cfg.patch_t).array() += 1.0;
    }
  }
  MatF out = MatF::Zero(F, T);
  double maxv = 0.0;
  for (int f = 0; f < F; ++f)
    for (int t = 0; t < T; ++t)
      if (cnt(f, t) > 0.0) {
        const double v = sum(f, t) / cnt(f, t);
        out(f, t) = static_cast<float>(v);
        maxv = std::max(maxv, v);
      }
  if (maxv > 0.0) out /= static_cast<float>(maxv);
  return out;
}

#define FFTP_INSTANTIATE(S)                                                                   \
  template struct EncoderParams<S>;                                                          \
  template std::vector<TensorView<S>> tensor_views(EncoderParams<S>&);                       \
  template ForwardOutput<S> encoder_forward(const Mat<S>&, const EncoderParams<S>&, bool,    \
                                            ForwardCache<S>*);                               \
  template Mat<S> encoder_backward(const ForwardCache<S>&, const EncoderParams<S>&,          \
                                   const Vec<S>&, EncoderParams<S>&);                        \
  template Mat<S> attention_rollout(const AttentionTrace<S>&);

FFTP_INSTANTIATE(float)
FFTP_INSTANTIATE(double)
#undef FFTP_INSTANTIATE

template EncoderParams<double> EncoderParams<float>::cast<double>() const;
template EncoderParams<float> EncoderParams<double>::cast<float>() const;
template EncoderParams<float> EncoderParams<float>::cast<float>() const;

}  // namespace fftp
