#include "fftp/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <thread>

#include "fftp/checkpoint.hpp"
#include "fftp/serde.hpp"

namespace fftp {

namespace {

constexpr std::uint64_t kStreamInit = 0xF17B0001ULL;
constexpr std::uint64_t kStreamSplit = 0xF17B0002ULL;
constexpr std::uint64_t kStreamEpoch = 0xF17B0003ULL;
constexpr std::uint64_t kStreamSample = 0xF17B0004ULL;

constexpr double kPi = 3.14159265358979323846;

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

int argmax_row(const VecF& v) {
  int best = 0;
  for (int i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

// Static contiguous chunks; results must go to disjoint slots.
template <typename Fn>
void parallel_for(int n, int threads, Fn&& fn) {
  threads = std::max(1, std::min(threads, n));
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  const int chunk = (n + threads - 1) / threads;
  for (int t = 0; t < threads; ++t) {
    const int lo = t * chunk;
    const int hi = std::min(n, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([lo, hi, &fn] {
      for (int i = lo; i < hi; ++i) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

struct Grads {
  EmbeddingWeights embed;
  EncoderParams<float> enc;
};

std::vector<TensorView<float>> views_of(EmbeddingWeights& e, EncoderParams<float>& enc) {
  std::vector<TensorView<float>> out;
  out.push_back({"embed.w", e.w.data(), e.w.rows(), e.w.cols()});
  out.push_back({"embed.b", e.b.data(), e.b.size(), 1});
  auto ev = tensor_views(enc);
  out.insert(out.end(), std::make_move_iterator(ev.begin()), std::make_move_iterator(ev.end()));
  return out;
}

Grads make_grads(const Model& m) {
  Grads g;
  g.embed.w = MatF::Zero(m.embed.w.rows(), m.embed.w.cols());
  g.embed.b = VecF::Zero(m.embed.b.size());
  g.enc = EncoderParams<float>::zeros(m.enc.cfg);
  return g;
}

void zero_views(const std::vector<TensorView<float>>& views) {
  for (const auto& v : views) std::fill(v.data, v.data + v.size(), 0.0f);
}

void add_views(const std::vector<TensorView<float>>& into,
               const std::vector<TensorView<float>>& from) {
  for (std::size_t k = 0; k < into.size(); ++k)
    for (std::int64_t i = 0; i < into[k].size(); ++i) into[k].data[i] += from[k].data[i];
}

// Forward + loss + backward for one preprocessed sample; accumulates
// parameter gradients scaled by inv_batch. Returns the unscaled loss.
double sample_loss_and_grad(const Model& m, const MatF& normalized, const VecF& target,
                            double inv_batch, Grads& g) {
  MelSpectrogram s;
  s.data = normalized;
  const MatF patches = extract_patches(s, m.patch);
  const PatchGrid grid =
      patch_count(m.patch, static_cast<int>(normalized.rows()), static_cast<int>(normalized.cols()));
  TokenSequence ts = embed(patches, grid, m.embed);
  const int n = ts.count();
  const TokenSequence seq = prepend_class_token(ts, m.enc.cls, m.enc.pos.topRows(n + 1));

  ForwardCache<float> cache;
  const ForwardOutput<float> out = encoder_forward(seq.tokens, m.enc, false, &cache);

  double loss;
  VecF dlogits;
  if (m.task == Task::kMultilabel) {
    loss = bce_loss(out.logits, target);
    dlogits = bce_loss_grad(out.logits, target);
  } else {
    const int cls = argmax_row(target);
    loss = ce_loss(out.logits, cls);
    dlogits = ce_loss_grad(out.logits, cls);
  }
  dlogits *= static_cast<float>(inv_batch);

  const MatF d_tokens = encoder_backward(cache, m.enc, dlogits, g.enc);
  g.enc.pos.topRows(n + 1) += d_tokens;
  g.enc.cls += d_tokens.row(0).transpose();
  const auto d_emb = d_tokens.bottomRows(n);
  g.embed.w += d_emb.transpose() * patches;
  g.embed.b += d_emb.colwise().sum().transpose();
  return loss;
}

MetricsReport evaluate_cached(const Model& m, const std::vector<MatF>& mels, const MatF& targets,
                              const std::vector<int>& idx, int threads) {
  const int b = static_cast<int>(idx.size());
  if (b == 0) throw InvalidArgument("evaluate: nothing to evaluate");
  const int c = m.n_classes();
  MatF scores(b, c);
  MatF sub(b, c);
  std::vector<double> losses(static_cast<std::size_t>(b));
  parallel_for(b, threads, [&](int k) {
    const int i = idx[static_cast<std::size_t>(k)];
    MelSpectrogram s;
    s.data = mels[static_cast<std::size_t>(i)];
    const TokenSequence seq = m.tokenize(m.apply_norm(s));
    const VecF logits = encoder_forward(seq.tokens, m.enc).logits;
    const VecF target = targets.row(i).transpose();
    scores.row(k) = logits.transpose();
    sub.row(k) = target.transpose();
    losses[static_cast<std::size_t>(k)] = m.task == Task::kMultilabel
                                              ? bce_loss(logits, target)
                                              : ce_loss(logits, argmax_row(target));
  });
  MetricsReport rep;
  rep.loss = std::accumulate(losses.begin(), losses.end(), 0.0) / b;
  if (m.task == Task::kMultilabel) {
    std::tie(rep.map, rep.per_class_ap) = mean_average_precision(scores, sub);
  } else {
    rep.accuracy = accuracy(scores, sub);
  }
  return rep;
}

}  // namespace

double bce_loss(const VecF& logits, const VecF& targets) {
  if (logits.size() != targets.size()) throw ShapeError("bce_loss: shape mismatch");
  if (logits.size() == 0) throw ShapeError("bce_loss: empty input");
  double total = 0.0;
  for (int i = 0; i < logits.size(); ++i) {
    const double z = logits[i];
    const double t = targets[i];
    if (t < 0.0 || t > 1.0) throw InvalidArgument("bce_loss: target outside [0, 1]");
    total += std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
  }
  return total / static_cast<double>(logits.size());
}

VecF bce_loss_grad(const VecF& logits, const VecF& targets) {
  if (logits.size() != targets.size()) throw ShapeError("bce_loss_grad: shape mismatch");
  if (logits.size() == 0) throw ShapeError("bce_loss_grad: empty input");
  VecF g(logits.size());
  const double inv = 1.0 / static_cast<double>(logits.size());
  for (int i = 0; i < logits.size(); ++i)
    g[i] = static_cast<float>((sigmoid(logits[i]) - targets[i]) * inv);
  return g;
}

double ce_loss(const VecF& logits, int target_class) {
  if (logits.size() == 0) throw ShapeError("ce_loss: empty input");
  if (target_class < 0 || target_class >= logits.size())
    throw InvalidArgument("ce_loss: class index out of range");
  const double mx = logits.maxCoeff();
  double sum = 0.0;
  for (int i = 0; i < logits.size(); ++i) sum += std::exp(static_cast<double>(logits[i]) - mx);
  return mx + std::log(sum) - static_cast<double>(logits[target_class]);
}

VecF ce_loss_grad(const VecF& logits, int target_class) {
  if (logits.size() == 0) throw ShapeError("ce_loss_grad: empty input");
  if (target_class < 0 || target_class >= logits.size())
    throw InvalidArgument("ce_loss_grad: class index out of range");
  const double mx = logits.maxCoeff();
  double sum = 0.0;
  for (int i = 0; i < logits.size(); ++i) sum += std::exp(static_cast<double>(logits[i]) - mx);
  VecF g(logits.size());
  for (int i = 0; i < logits.size(); ++i)
    g[i] = static_cast<float>(std::exp(static_cast<double>(logits[i]) - mx) / sum);
  g[target_class] -= 1.0f;
  return g;
}

double lr_at(std::int64_t step, double peak_lr, std::int64_t warmup_steps,
             std::int64_t total_steps) {
  if (total_steps < 1) throw InvalidArgument("lr_at: total_steps must be >= 1");
  if (warmup_steps < 0 || warmup_steps >= total_steps)
    throw InvalidArgument("lr_at: need 0 <= warmup_steps < total_steps");
  if (step < 0 || step > total_steps) throw InvalidArgument("lr_at: step out of range");
  if (step < warmup_steps)
    return peak_lr * static_cast<double>(step) / static_cast<double>(warmup_steps);
  const double progress =
      static_cast<double>(step - warmup_steps) / static_cast<double>(total_steps - warmup_steps);
  return peak_lr * 0.5 * (1.0 + std::cos(kPi * progress));
}

void adamw_step(const std::vector<TensorView<float>>& params,
                const std::vector<TensorView<float>>& grads, AdamState& state, double lr,
                double weight_decay, const AdamConfig& acfg) {
  if (params.size() != grads.size()) throw ShapeError("adamw_step: view count mismatch");
  std::int64_t total = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (params[k].rows != grads[k].rows || params[k].cols != grads[k].cols)
      throw ShapeError("adamw_step: shape mismatch at " + params[k].name);
    total += params[k].size();
  }
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(static_cast<std::size_t>(total), 0.0f);
    state.v.assign(static_cast<std::size_t>(total), 0.0f);
  } else if (static_cast<std::int64_t>(state.m.size()) != total ||
             static_cast<std::int64_t>(state.v.size()) != total) {
    throw ShapeError("adamw_step: optimizer state does not match parameters");
  }
  state.step_count += 1;
  const double bc1 = 1.0 - std::pow(acfg.beta1, static_cast<double>(state.step_count));
  const double bc2 = 1.0 - std::pow(acfg.beta2, static_cast<double>(state.step_count));
  std::int64_t off = 0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    float* p = params[k].data;
    const float* g = grads[k].data;
    for (std::int64_t i = 0; i < params[k].size(); ++i) {
      const double gi = g[i];
      const double m = acfg.beta1 * state.m[static_cast<std::size_t>(off + i)] +
                       (1.0 - acfg.beta1) * gi;
      const double v = acfg.beta2 * state.v[static_cast<std::size_t>(off + i)] +
                       (1.0 - acfg.beta2) * gi * gi;
      state.m[static_cast<std::size_t>(off + i)] = static_cast<float>(m);
      state.v[static_cast<std::size_t>(off + i)] = static_cast<float>(v);
      double x = p[i];
      x -= lr * weight_decay * x;
      x -= lr * (m / bc1) / (std::sqrt(v / bc2) + acfg.eps);
      p[i] = static_cast<float>(x);
    }
    off += params[k].size();
  }
}

std::pair<double, VecF> mean_average_precision(const MatF& scores, const MatF& targets) {
  if (scores.rows() != targets.rows() || scores.cols() != targets.cols())
    throw ShapeError("mean_average_precision: shape mismatch");
  const int b = static_cast<int>(scores.rows());
  const int c = static_cast<int>(scores.cols());
  if (b == 0 || c == 0) throw MetricError("mean_average_precision: empty input");
  VecF ap = VecF::Constant(c, -1.0f);
  std::vector<int> order(static_cast<std::size_t>(b));
  double sum = 0.0;
  int counted = 0;
  for (int cls = 0; cls < c; ++cls) {
    int n_pos = 0;
    for (int i = 0; i < b; ++i)
      if (targets(i, cls) > 0.5f) ++n_pos;
    if (n_pos == 0) continue;
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int bb) { return scores(a, cls) > scores(bb, cls); });
    int hits = 0;
    double acc = 0.0;
    for (int rank = 1; rank <= b; ++rank) {
      if (targets(order[static_cast<std::size_t>(rank - 1)], cls) > 0.5f) {
        ++hits;
        acc += static_cast<double>(hits) / rank;
      }
    }
    ap[cls] = static_cast<float>(acc / n_pos);
    sum += acc / n_pos;
    ++counted;
  }
  if (counted == 0) throw MetricError("mean_average_precision: no class has a positive sample");
  return {sum / counted, ap};
}

double accuracy(const MatF& scores, const MatF& targets) {
  if (scores.rows() != targets.rows() || scores.cols() != targets.cols())
    throw ShapeError("accuracy: shape mismatch");
  if (scores.rows() == 0) throw MetricError("accuracy: empty input");
  int correct = 0;
  for (int i = 0; i < scores.rows(); ++i) {
    const VecF s = scores.row(i).transpose();
    const VecF t = targets.row(i).transpose();
    if (argmax_row(s) == argmax_row(t)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(scores.rows());
}

std::pair<Waveform, VecF> mixup(const Waveform& a, const Waveform& b, const VecF& ya,
                                const VecF& yb, double lambda) {
  if (a.sample_rate != b.sample_rate) throw InvalidArgument("mixup: sample rate mismatch");
  if (lambda < 0.0 || lambda > 1.0) throw InvalidArgument("mixup: lambda outside [0, 1]");
  if (ya.size() != yb.size()) throw ShapeError("mixup: label shape mismatch");
  const std::size_t n = std::min(a.samples.size(), b.samples.size());
  Waveform out;
  out.sample_rate = a.sample_rate;
  out.samples.resize(n);
  const float l = static_cast<float>(lambda);
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = l * a.samples[i] + (1.0f - l) * b.samples[i];
  VecF y = l * ya + (1.0f - l) * yb;
  return {std::move(out), std::move(y)};
}

std::string to_string(Augmentation a) {
  switch (a) {
    case Augmentation::kNone: return "none";
    case Augmentation::kSpecAugment: return "specaugment";
    case Augmentation::kSpecMask: return "specmask";
  }
  return "none";
}

Augmentation augmentation_from_string(const std::string& s) {
  if (s == "none") return Augmentation::kNone;
  if (s == "specaugment") return Augmentation::kSpecAugment;
  if (s == "specmask") return Augmentation::kSpecMask;
  throw InvalidArgument("unknown augmentation: " + s);
}

void validate(const TrainConfig& cfg) {
  if (cfg.epochs < 1) throw InvalidArgument("train: epochs must be >= 1");
  if (cfg.batch_size < 1) throw InvalidArgument("train: batch_size must be >= 1");
  if (cfg.peak_lr < 0.0) throw InvalidArgument("train: peak_lr must be >= 0");
  if (cfg.warmup_steps < -1) throw InvalidArgument("train: warmup_steps must be >= -1");
  if (cfg.weight_decay < 0.0) throw InvalidArgument("train: weight_decay must be >= 0");
  if (cfg.mixup_lambda < 0.0 || cfg.mixup_lambda > 1.0)
    throw InvalidArgument("train: mixup_lambda outside [0, 1]");
  if (cfg.val_fraction < 0.0 || cfg.val_fraction >= 1.0)
    throw InvalidArgument("train: val_fraction outside [0, 1)");
}

Model Model::init(const MelConfig& mel, const PatchConfig& patch, EncoderConfig enc_cfg,
                  std::vector<std::string> class_names, Task task, int target_frames,
                  std::uint64_t seed) {
  if (class_names.size() < 2) throw InvalidArgument("model: need at least 2 classes");
  if (target_frames < 1) throw InvalidArgument("model: target_frames must be >= 1");
  Model m;
  m.mel = mel;
  m.target_frames = target_frames;
  m.patch = patch;
  m.class_names = std::move(class_names);
  m.task = task;
  const PatchGrid grid = patch_count(patch, mel.n_mels, target_frames);
  enc_cfg.n_classes = m.n_classes();
  enc_cfg.max_tokens = static_cast<int>(grid.count()) + 1;
  validate(enc_cfg);

  Rng rng(Rng::derive(seed, kStreamInit));
  const int p_area = patch.patch_f * patch.patch_t;
  m.embed.w.resize(enc_cfg.dim, p_area);
  for (std::int64_t i = 0; i < m.embed.w.size(); ++i)
    m.embed.w.data()[i] = static_cast<float>(rng.gaussian(0.0, 0.02));
  m.embed.b = VecF::Zero(enc_cfg.dim);
  m.enc = EncoderParams<float>::random_init(enc_cfg, rng);
  return m;
}

MelSpectrogram Model::frontend_raw(const Waveform& w) const {
  MelSpectrogram s = log_mel(w, mel);
  const float fill = s.data.mean();
  return pad_or_trim(s, target_frames, fill);
}

MatF Model::apply_norm(const MelSpectrogram& s) const {
  if (!normalize) return s.data;
  if (!(norm_std > 0.0f)) throw InvalidArgument("model: norm_std must be positive");
  return ((s.data.array() - norm_mean) / norm_std).matrix();
}

TokenSequence Model::tokenize(const MatF& normalized) const {
  MelSpectrogram s;
  s.data = normalized;
  const MatF patches = extract_patches(s, patch);
  const PatchGrid grid =
      patch_count(patch, static_cast<int>(normalized.rows()), static_cast<int>(normalized.cols()));
  const TokenSequence ts = fftp::embed(patches, grid, embed);
  return prepend_class_token(ts, enc.cls, enc.pos.topRows(ts.count() + 1));
}

VecF Model::logits(const Waveform& w) const {
  const TokenSequence seq = tokenize(apply_norm(frontend_raw(w)));
  return encoder_forward(seq.tokens, enc).logits;
}

MatF Model::relevance_heatmap(const Waveform& w) const {
  const TokenSequence seq = tokenize(apply_norm(frontend_raw(w)));
  const ForwardOutput<float> out = encoder_forward(seq.tokens, enc, /*capture_attention=*/true);
  const MatF roll = attention_rollout(out.trace);
  const VecF relevance = roll.row(0).transpose();
  const PatchGrid grid = patch_count(patch, mel.n_mels, target_frames);
  return rollout_heatmap(relevance, patch, grid, mel.n_mels, target_frames);
}

std::vector<TensorView<float>> model_views(Model& m) { return views_of(m.embed, m.enc); }

void save_model(const Model& m, const std::string& stem) {
  nlohmann::json config;
  config["frontend"] = to_json(m.mel);
  config["patch"] = to_json(m.patch);
  config["model"] = to_json(m.enc.cfg);
  config["target_frames"] = m.target_frames;
  config["norm"] = {{"enabled", m.normalize}, {"mean", m.norm_mean}, {"std", m.norm_std}};
  config["classes"] = m.class_names;
  config["task"] = to_string(m.task);
  Model& mutable_m = const_cast<Model&>(m);  // views are read-only here
  save_checkpoint(stem, config, model_views(mutable_m));
}

Model load_model(const std::string& stem) {
  const nlohmann::json config = read_checkpoint_config(stem);
  Model m;
  try {
    m.mel = mel_config_from_json(config.at("frontend"), "frontend.");
    m.patch = patch_config_from_json(config.at("patch"), "patch.");
    const EncoderConfig ecfg = encoder_config_from_json(config.at("model"), "model.");
    m.target_frames = config.at("target_frames").get<int>();
    const auto& norm = config.at("norm");
    m.normalize = norm.at("enabled").get<bool>();
    m.norm_mean = norm.at("mean").get<float>();
    m.norm_std = norm.at("std").get<float>();
    m.class_names = config.at("classes").get<std::vector<std::string>>();
    m.task = task_from_string(config.at("task").get<std::string>());
    m.enc = EncoderParams<float>::zeros(ecfg);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(stem + ".json: " + e.what());
  }
  m.embed.w = MatF::Zero(m.enc.cfg.dim, m.patch.patch_f * m.patch.patch_t);
  m.embed.b = VecF::Zero(m.enc.cfg.dim);
  auto views = model_views(m);
  load_checkpoint(stem, views);
  return m;
}

TrainOutputs train(Model model, const Dataset& data, const TrainConfig& cfg,
                   const TrainOptions& opts) {
  validate(cfg);
  if (data.size() == 0) throw InvalidArgument("train: empty dataset");
  if (data.targets.rows() != data.size())
    throw ShapeError("train: targets row count does not match waveforms");
  if (data.n_classes() != model.n_classes() ||
      data.targets.cols() != static_cast<Eigen::Index>(model.n_classes()))
    throw ShapeError("train: class count mismatch between dataset and model");
  if (cfg.task != model.task) throw InvalidArgument("train: task mismatch between config and model");
  const int threads = std::max(1, opts.threads);

  const int n = data.size();
  std::vector<int> perm(static_cast<std::size_t>(n));
  std::iota(perm.begin(), perm.end(), 0);
  {
    Rng r(Rng::derive(cfg.seed, kStreamSplit));
    shuffle(perm, r);
  }
  const int n_val = static_cast<int>(std::llround(n * cfg.val_fraction));
  if (n - n_val < 1) throw InvalidArgument("train: empty training split");
  std::vector<int> val_idx(perm.begin(), perm.begin() + n_val);
  std::vector<int> train_idx(perm.begin() + n_val, perm.end());
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(train_idx.begin(), train_idx.end());
  const int n_train = static_cast<int>(train_idx.size());

  // Raw padded spectrograms for every sample; mixup recomputes its own.
  std::vector<MatF> mels(static_cast<std::size_t>(n));
  parallel_for(n, threads, [&](int i) {
    mels[static_cast<std::size_t>(i)] = model.frontend_raw(data.waves[static_cast<std::size_t>(i)]).data;
  });

  if (model.normalize) {
    double sum = 0.0, sumsq = 0.0;
    std::int64_t count = 0;
    for (const int i : train_idx) {
      const MatF& m = mels[static_cast<std::size_t>(i)];
      sum += m.cast<double>().sum();
      sumsq += m.cast<double>().array().square().sum();
      count += m.size();
    }
    const double mean = sum / static_cast<double>(count);
    const double var = std::max(sumsq / static_cast<double>(count) - mean * mean, 1e-12);
    model.norm_mean = static_cast<float>(mean);
    model.norm_std = static_cast<float>(std::sqrt(var));
  }

  const bool use_mixup = cfg.task == Task::kMultilabel && cfg.mixup_lambda > 0.0;
  const std::int64_t steps_per_epoch = (n_train + cfg.batch_size - 1) / cfg.batch_size;
  const std::int64_t total_steps = steps_per_epoch * cfg.epochs;
  const std::int64_t warmup =
      cfg.warmup_steps < 0 ? std::min(total_steps - 1, std::max<std::int64_t>(1, total_steps / 10))
                           : cfg.warmup_steps;
  if (warmup >= total_steps)
    throw InvalidArgument("train: warmup_steps must be smaller than total steps (" +
                          std::to_string(total_steps) + ")");

  AdamState adam;
  const auto params = model_views(model);
  std::vector<Grads> workers;
  workers.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) workers.push_back(make_grads(model));
  std::vector<std::vector<TensorView<float>>> worker_views;
  for (auto& w : workers) worker_views.push_back(views_of(w.embed, w.enc));

  std::ofstream metrics;
  if (!opts.metrics_path.empty()) {
    metrics.open(opts.metrics_path);
    if (!metrics) throw IoError("cannot write " + opts.metrics_path);
  }

  TrainOutputs out;
  double best_metric = -1.0;
  std::int64_t step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<int> order = train_idx;
    {
      Rng r(Rng::derive(cfg.seed, kStreamEpoch, static_cast<std::uint64_t>(epoch)));
      shuffle(order, r);
    }

    double epoch_loss = 0.0;
    double last_lr = 0.0;
    for (std::int64_t b = 0; b < steps_per_epoch; ++b) {
      const int lo = static_cast<int>(b) * cfg.batch_size;
      const int hi = std::min(n_train, lo + cfg.batch_size);
      const int bsz = hi - lo;
      const double inv_batch = 1.0 / bsz;

      const int active = std::max(1, std::min(threads, bsz));
      std::vector<double> worker_loss(static_cast<std::size_t>(active), 0.0);
      const int chunk = (bsz + active - 1) / active;
      auto run_range = [&](int w, int klo, int khi) {
        Grads& g = workers[static_cast<std::size_t>(w)];
        for (int k = klo; k < khi; ++k) {
          const int idx = order[static_cast<std::size_t>(k)];
          Rng srng(Rng::derive(
              Rng::derive(cfg.seed, kStreamSample, static_cast<std::uint64_t>(epoch)),
              static_cast<std::uint64_t>(idx)));
          MatF mel_raw;
          VecF target = data.targets.row(idx).transpose();
          if (use_mixup) {
            const int partner =
                train_idx[static_cast<std::size_t>(srng.uniform_int(0, n_train - 1))];
            auto [wave, y] =
                mixup(data.waves[static_cast<std::size_t>(idx)],
                      data.waves[static_cast<std::size_t>(partner)], target,
                      data.targets.row(partner).transpose(), cfg.mixup_lambda);
            mel_raw = model.frontend_raw(wave).data;
            target = std::move(y);
          } else {
            mel_raw = mels[static_cast<std::size_t>(idx)];
          }
          MelSpectrogram s;
          s.data = std::move(mel_raw);
          if (cfg.augmentation == Augmentation::kSpecMask) {
            s = apply_specmask(s, cfg.mask, srng).masked;
          } else if (cfg.augmentation == Augmentation::kSpecAugment) {
            s = apply_specaugment(s, cfg.spec, srng);
          }
          worker_loss[static_cast<std::size_t>(w)] +=
              sample_loss_and_grad(model, model.apply_norm(s), target, inv_batch, g);
        }
      };

      for (int w = 0; w < active; ++w) zero_views(worker_views[static_cast<std::size_t>(w)]);
      if (active == 1) {
        run_range(0, lo, hi);
      } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < active; ++w) {
          const int klo = lo + w * chunk;
          const int khi = std::min(hi, klo + chunk);
          if (klo >= khi) break;
          pool.emplace_back(run_range, w, klo, khi);
        }
        for (auto& th : pool) th.join();
        for (int w = 1; w < active; ++w)
          add_views(worker_views[0], worker_views[static_cast<std::size_t>(w)]);
      }

      const double batch_loss =
          std::accumulate(worker_loss.begin(), worker_loss.end(), 0.0) * inv_batch;
      if (!std::isfinite(batch_loss))
        throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                           ", step " + std::to_string(b + 1));
      epoch_loss += batch_loss;

      step += 1;
      last_lr = lr_at(step, cfg.peak_lr, warmup, total_steps);
      adamw_step(params, worker_views[0], adam, last_lr, cfg.weight_decay);
    }
    epoch_loss /= static_cast<double>(steps_per_epoch);

    const std::vector<int>& eval_idx = val_idx.empty() ? train_idx : val_idx;
    const MetricsReport rep = evaluate_cached(model, mels, data.targets, eval_idx, threads);

    nlohmann::json rec{{"epoch", epoch},
                       {"train_loss", epoch_loss},
                       {"val_loss", rep.loss},
                       {"lr", last_lr}};
    if (cfg.task == Task::kMultilabel)
      rec["val_map"] = rep.map;
    else
      rec["val_accuracy"] = rep.accuracy;
    const std::string line = rec.dump();
    out.history.push_back(line);
    if (metrics.is_open()) {
      metrics << line << "\n";
      metrics.flush();
    }
    if (opts.log) {
      (*opts.log) << "epoch " << epoch << "/" << cfg.epochs << "  train_loss " << epoch_loss
                  << "  val_loss " << rep.loss << "  "
                  << (cfg.task == Task::kMultilabel ? "val_map " : "val_accuracy ")
                  << rep.primary(cfg.task) << "\n";
      opts.log->flush();
    }

    const double metric = rep.primary(cfg.task);
    if (metric > best_metric) {
      best_metric = metric;
      out.best = model;
      out.best_epoch = epoch;
      out.best_val = rep;
      if (!opts.checkpoint_stem.empty()) save_model(model, opts.checkpoint_stem);
    }
  }
  return out;
}

MetricsReport evaluate(const Model& m, const Dataset& data, int threads) {
  if (data.size() == 0) throw InvalidArgument("evaluate: empty dataset");
  const MatF targets =
      data.class_names == m.class_names ? data.targets : remap_targets(data, m.class_names);
  if (targets.rows() != data.size()) throw ShapeError("evaluate: targets row count mismatch");
  threads = std::max(1, threads);
  const int n = data.size();
  std::vector<MatF> mels(static_cast<std::size_t>(n));
  parallel_for(n, threads, [&](int i) {
    mels[static_cast<std::size_t>(i)] = m.frontend_raw(data.waves[static_cast<std::size_t>(i)]).data;
  });
  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  return evaluate_cached(m, mels, targets, idx, threads);
}

}  // namespace fftp
