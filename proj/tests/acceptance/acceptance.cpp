// Full-system checks, one verdict line per criterion. Exit code 0 only when
// every criterion passes. Heavier criteria print their evidence so a failure
// is diagnosable from the log alone.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include "fftp/flops.hpp"
#include "fftp/runconfig.hpp"
#include "fftp/synthdata.hpp"
#include "fftp/trainer.hpp"
#include "oracles.hpp"

using namespace fftp;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

char buf[512];

// ---- 1: patch counts ------------------------------------------------------

Verdict patch_counts() {
  struct Case {
    PatchMode mode;
    int pf, pt, sf, st, T;
    std::int64_t expect;
  };
  const std::vector<Case> cases = {
      {PatchMode::kFftp, 128, 50, 128, 10, 1000, 96},
      {PatchMode::kFftp, 128, 25, 128, 5, 1000, 196},
      {PatchMode::kFftp, 128, 10, 128, 4, 1000, 248},
      {PatchMode::kFftp, 128, 10, 128, 2, 1000, 496},
      {PatchMode::kFftp, 128, 10, 128, 1, 1000, 991},
      {PatchMode::kSquare, 16, 16, 10, 10, 1000, 1188},
      {PatchMode::kSquare, 16, 16, 10, 10, 1024, 1212},
  };
  for (const auto& c : cases) {
    PatchConfig p;
    p.mode = c.mode;
    p.patch_f = c.pf;
    p.patch_t = c.pt;
    p.stride_f = c.sf;
    p.stride_t = c.st;
    const PatchGrid g = patch_count(p, 128, c.T);
    if (g.count() != c.expect) {
      std::snprintf(buf, sizeof buf, "%s %dx%d/%dx%d on T=%d gave %lld, want %lld",
                    to_string(c.mode).c_str(), c.pf, c.pt, c.sf, c.st, c.T,
                    static_cast<long long>(g.count()), static_cast<long long>(c.expect));
      return {false, buf};
    }
    if (c.mode == PatchMode::kFftp && g.n_f != 1) return {false, "fftp grid must have n_f == 1"};
  }
  return {true, "7/7 layouts exact"};
}

// ---- 2: conv-embedding equivalence ----------------------------------------

Verdict conv_equivalence() {
  Rng rng(0xE1B);
  double worst = 0.0;
  const int cases = 120;
  for (int k = 0; k < cases; ++k) {
    const int F = static_cast<int>(rng.uniform_int(6, 48));
    const int T = static_cast<int>(rng.uniform_int(6, 72));
    PatchConfig cfg;
    if (rng.uniform01() < 0.5) {
      cfg.mode = PatchMode::kFftp;
      cfg.patch_f = F;
      cfg.stride_f = F;
      cfg.patch_t = static_cast<int>(rng.uniform_int(1, T));
      cfg.stride_t = static_cast<int>(rng.uniform_int(1, cfg.patch_t));
    } else {
      cfg.mode = PatchMode::kSquare;
      cfg.patch_f = static_cast<int>(rng.uniform_int(1, F));
      cfg.patch_t = static_cast<int>(rng.uniform_int(1, T));
      cfg.stride_f = static_cast<int>(rng.uniform_int(1, cfg.patch_f));
      cfg.stride_t = static_cast<int>(rng.uniform_int(1, cfg.patch_t));
    }
    const int D = static_cast<int>(rng.uniform_int(2, 24));

    MelSpectrogram spec;
    spec.data.resize(F, T);
    for (Eigen::Index i = 0; i < spec.data.size(); ++i)
      spec.data.data()[i] = static_cast<float>(rng.gaussian());
    EmbeddingWeights w;
    w.w.resize(D, cfg.patch_f * cfg.patch_t);
    for (Eigen::Index i = 0; i < w.w.size(); ++i)
      w.w.data()[i] = static_cast<float>(rng.gaussian(0.0, 0.02));
    w.b.resize(D);
    for (Eigen::Index i = 0; i < w.b.size(); ++i)
      w.b[i] = static_cast<float>(rng.gaussian());

    const PatchGrid g = patch_count(cfg, F, T);
    const TokenSequence ts = embed(extract_patches(spec, cfg), g, w);
    const MatF want = oracles::conv_embed(spec.data, cfg, w.w, w.b);
    if (ts.tokens.rows() != want.rows() || ts.tokens.cols() != want.cols())
      return {false, "token shape mismatch vs oracle"};
    const double diff = (ts.tokens - want).cwiseAbs().maxCoeff();
    worst = std::max(worst, diff);
  }
  if (worst >= 1e-5) {
    std::snprintf(buf, sizeof buf, "max abs diff %.3g >= 1e-5", worst);
    return {false, buf};
  }
  std::snprintf(buf, sizeof buf, "%d cases, max abs diff %.3g", cases, worst);
  return {true, buf};
}

// ---- 3: specmask properties ------------------------------------------------

Verdict specmask_properties() {
  const int H = 128, W = 1000;
  SpecMaskConfig cfg;  // defaults are the target setting: A=25600, max 128x128
  MelSpectrogram spec;
  spec.data.resize(H, W);
  Rng fill(77);
  for (Eigen::Index i = 0; i < spec.data.size(); ++i)
    spec.data.data()[i] = static_cast<float>(fill.gaussian());

  const int seeds = 400;
  std::int64_t full = 0, total = 0;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(Rng::derive(0xACC3, static_cast<std::uint64_t>(s)));
    const SpecMaskResult res = apply_specmask(spec, cfg, rng);
    if (res.cap_exhausted) return {false, "cap exhausted at seed " + std::to_string(s)};

    std::int64_t event_area = 0;
    for (const auto& e : res.events) {
      if (e.x < 0 || e.y < 0 || e.x + e.h > H || e.y + e.w > W)
        return {false, "event out of bounds"};
      event_area += static_cast<std::int64_t>(e.h) * e.w;
    }
    std::int64_t map_area = 0;
    for (Eigen::Index i = 0; i < res.map.m.size(); ++i)
      map_area += res.map.m.data()[i] ? 1 : 0;
    // Disjoint regions cover exactly as many cells as their areas sum to.
    if (event_area != res.map.masked_area || map_area != res.map.masked_area)
      return {false, "masks overlap or the area ledger disagrees with the map"};

    if (res.map.masked_area < cfg.budget_area ||
        res.map.masked_area >= cfg.budget_area + 128 * 128) {
      std::snprintf(buf, sizeof buf, "masked_area %lld outside [A, A+16384) at seed %d",
                    static_cast<long long>(res.map.masked_area), s);
      return {false, buf};
    }

    for (Eigen::Index r = 0; r < H; ++r)
      for (Eigen::Index c = 0; c < W; ++c)
        if (!res.map.m(r, c) &&
            std::memcmp(&res.masked.data(r, c), &spec.data(r, c), sizeof(float)) != 0)
          return {false, "unmasked cell modified"};

    for (const auto& e : res.events) full += e.kind == MaskKind::kFullFrequency ? 1 : 0;
    total += static_cast<std::int64_t>(res.events.size());
  }
  const double frac = static_cast<double>(full) / static_cast<double>(total);
  std::snprintf(buf, sizeof buf, "%d seeds, %lld masks, full-frequency fraction %.4f", seeds,
                static_cast<long long>(total), frac);
  if (std::abs(frac - 0.7) > 0.03) return {false, buf};
  return {true, buf};
}

// ---- 4: gradient correctness -----------------------------------------------

Verdict gradient_check() {
  EncoderConfig cfg;
  cfg.depth = 1;
  cfg.dim = 8;
  cfg.heads = 2;
  cfg.mlp_ratio = 2.0;
  cfg.n_classes = 3;
  cfg.max_tokens = 8;

  Rng rng(515);
  EncoderParams<double> p = EncoderParams<double>::random_init(cfg, rng);
  // Initialization keeps weights tiny; scale up so the network is not
  // operating in its linear regime.
  for (auto& v : tensor_views(p))
    if (v.name.find("ln") == std::string::npos)
      for (std::int64_t i = 0; i < v.size(); ++i) v.data[i] *= 12.0;

  const int n_tokens = 4;  // class token + 3 patches
  Eigen::MatrixXd patches(n_tokens - 1, cfg.dim);
  for (Eigen::Index i = 0; i < patches.size(); ++i) patches.data()[i] = rng.gaussian();
  Eigen::VectorXd dlogits(cfg.n_classes);
  for (int i = 0; i < cfg.n_classes; ++i) dlogits[i] = std::sin(1.0 + i);

  const auto tokens_of = [&](const EncoderParams<double>& q) {
    Eigen::MatrixXd t(n_tokens, cfg.dim);
    t.row(0) = q.cls.transpose() + q.pos.row(0);
    for (int i = 1; i < n_tokens; ++i) t.row(i) = patches.row(i - 1) + q.pos.row(i);
    return t;
  };
  const auto loss_of = [&](const EncoderParams<double>& q) {
    return encoder_forward(tokens_of(q), q).logits.dot(dlogits);
  };

  ForwardCache<double> cache;
  encoder_forward(tokens_of(p), p, false, &cache);
  EncoderParams<double> grads = EncoderParams<double>::zeros(cfg);
  const Eigen::MatrixXd dtokens = encoder_backward(cache, p, dlogits, grads);
  grads.cls += dtokens.row(0).transpose();
  grads.pos.topRows(n_tokens) += dtokens;

  auto views = tensor_views(p);
  auto gviews = tensor_views(grads);
  double worst = 0.0;
  std::string worst_name;
  for (std::size_t t = 0; t < views.size(); ++t) {
    double max_diff = 0.0, max_fd = 0.0;
    for (std::int64_t i = 0; i < views[t].size(); ++i) {
      const double x0 = views[t].data[i];
      const double h = 1e-6 * (1.0 + std::abs(x0));
      views[t].data[i] = x0 + h;
      const double lp = loss_of(p);
      views[t].data[i] = x0 - h;
      const double lm = loss_of(p);
      views[t].data[i] = x0;
      const double fd = (lp - lm) / (2.0 * h);
      max_diff = std::max(max_diff, std::abs(fd - gviews[t].data[i]));
      max_fd = std::max(max_fd, std::abs(fd));
    }
    const double rel = max_diff / (max_fd + 1e-12);
    if (rel > worst) {
      worst = rel;
      worst_name = views[t].name;
    }
    if (rel >= 1e-4) {
      std::snprintf(buf, sizeof buf, "group %s relative error %.3g >= 1e-4",
                    views[t].name.c_str(), rel);
      return {false, buf};
    }
  }
  std::snprintf(buf, sizeof buf, "%zu parameter groups, worst %s at %.3g", views.size(),
                worst_name.c_str(), worst);
  return {true, buf};
}

// ---- 5: attention rollout ---------------------------------------------------

Verdict rollout_checks() {
  // Random stacks stay row-stochastic.
  Rng rng(3131);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = static_cast<int>(rng.uniform_int(2, 9));
    const int depth = static_cast<int>(rng.uniform_int(1, 4));
    AttentionTrace<float> trace;
    for (int l = 0; l < depth; ++l) {
      MatF a(n, n);
      for (Eigen::Index i = 0; i < a.size(); ++i)
        a.data()[i] = static_cast<float>(rng.uniform01()) + 1e-3f;
      for (int r = 0; r < n; ++r) a.row(r) /= a.row(r).sum();
      trace.push_back(a);
    }
    const MatF roll = attention_rollout(trace);
    for (int r = 0; r < n; ++r) {
      if (std::abs(roll.row(r).sum() - 1.0f) > 1e-6f)
        return {false, "rollout row sum deviates from 1"};
      if (roll.row(r).minCoeff() < 0.0f) return {false, "negative rollout weight"};
    }
  }

  // Identity attention must roll out to the identity.
  AttentionTrace<float> eye(3, MatF::Identity(5, 5));
  const MatF id_roll = attention_rollout(eye);
  if ((id_roll - MatF::Identity(5, 5)).cwiseAbs().maxCoeff() != 0.0f)
    return {false, "identity attention did not roll out to identity"};

  // Uniform 2-token attention, worked by hand.
  const MatF uniform = MatF::Constant(2, 2, 0.5f);
  const MatF one = attention_rollout(AttentionTrace<float>{uniform});
  const MatF two = attention_rollout(AttentionTrace<float>{uniform, uniform});
  MatF want1(2, 2), want2(2, 2);
  want1 << 0.75f, 0.25f, 0.25f, 0.75f;
  want2 << 0.625f, 0.375f, 0.375f, 0.625f;
  const double d1 = (one - want1).cwiseAbs().maxCoeff();
  const double d2 = (two - want2).cwiseAbs().maxCoeff();
  if (d1 > 1e-12 || d2 > 1e-12) {
    std::snprintf(buf, sizeof buf, "hand cases off by %.3g / %.3g", d1, d2);
    return {false, buf};
  }
  return {true, "stochastic, identity, and hand cases hold"};
}

// ---- 6: efficiency trend ----------------------------------------------------

Verdict efficiency_trend() {
  EncoderConfig vit;
  vit.depth = 12;
  vit.dim = 768;
  vit.heads = 12;
  vit.mlp_ratio = 4.0;
  vit.n_classes = 527;
  vit.max_tokens = 2048;

  const auto fftp_cfg = [](int pt, int st) {
    PatchConfig p;
    p.mode = PatchMode::kFftp;
    p.patch_f = 128;
    p.patch_t = pt;
    p.stride_f = 128;
    p.stride_t = st;
    return p;
  };
  PatchConfig square;
  square.mode = PatchMode::kSquare;
  square.patch_f = 16;
  square.patch_t = 16;
  square.stride_f = 10;
  square.stride_t = 10;

  const FlopsReport f196 = count_flops(vit, fftp_cfg(25, 5), 128, 1000, 527);
  const FlopsReport s1212 = count_flops(vit, square, 128, 1024, 527);
  const double reduction = 1.0 - f196.total_flops / s1212.total_flops;
  if (f196.n_patches != 196 || s1212.n_patches != 1212)
    return {false, "unexpected patch counts in the comparison pair"};
  if (reduction < 0.80) {
    std::snprintf(buf, sizeof buf, "FLOPs reduction %.2f%% < 80%%", 100.0 * reduction);
    return {false, buf};
  }

  const std::vector<std::pair<int, int>> sweep = {{50, 10}, {25, 5}, {10, 4}, {10, 2}, {10, 1}};
  double prev = 0.0;
  for (const auto& [pt, st] : sweep) {
    const FlopsReport r = count_flops(vit, fftp_cfg(pt, st), 128, 1000, 527);
    if (r.total_flops <= prev) return {false, "counted FLOPs not strictly increasing"};
    prev = r.total_flops;
  }

  // Wall clock at desk dims, medians over repeated runs.
  EncoderConfig desk;
  desk.depth = 4;
  desk.dim = 128;
  desk.heads = 4;
  desk.mlp_ratio = 4.0;
  desk.n_classes = 6;
  desk.max_tokens = 1400;

  std::string lat_log;
  double prev_ms = 0.0;
  for (const auto& [pt, st] : sweep) {
    const LatencyStats s = measure_latency(desk, fftp_cfg(pt, st), 128, 1000, 15, 99);
    std::snprintf(buf, sizeof buf, "%s%lld:%.1fms", lat_log.empty() ? "" : " ",
                  static_cast<long long>(patch_count(fftp_cfg(pt, st), 128, 1000).count() + 1),
                  s.median_ms);
    lat_log += buf;
    if (s.median_ms <= prev_ms) {
      std::snprintf(buf, sizeof buf, "latency not strictly increasing (%s)", lat_log.c_str());
      return {false, buf};
    }
    prev_ms = s.median_ms;
  }
  std::snprintf(buf, sizeof buf, "reduction %.2f%%, counted sweep increasing, latency %s",
                100.0 * reduction, lat_log.c_str());
  return {true, buf};
}

// ---- 7: desk-scale training -------------------------------------------------

struct DeskRun {
  const char* name;
  PatchConfig patch;
};

Verdict desk_training() {
  MelConfig mel;  // 16 kHz, 128 mels, 10 ms shift: 1 s -> 98 frames
  const int target_frames = 98;

  const auto fftp_cfg = [](int st) {
    PatchConfig p;
    p.mode = PatchMode::kFftp;
    p.patch_f = 128;
    p.patch_t = 8;
    p.stride_f = 128;
    p.stride_t = st;
    return p;
  };
  PatchConfig square;
  square.mode = PatchMode::kSquare;
  square.patch_f = 16;
  square.patch_t = 16;
  square.stride_f = 10;
  square.stride_t = 10;

  const std::vector<DeskRun> runs = {
      {"fftp_s8", fftp_cfg(8)},
      {"fftp_s4", fftp_cfg(4)},
      {"fftp_s2", fftp_cfg(2)},
      {"square", square},
  };

  EncoderConfig enc;
  enc.depth = 2;
  enc.dim = 64;
  enc.heads = 4;
  enc.mlp_ratio = 2.0;

  TrainConfig tc;
  tc.epochs = 5;
  tc.batch_size = 16;
  tc.peak_lr = 2e-3;
  tc.task = Task::kSinglelabel;
  tc.mixup_lambda = 0.0;
  tc.val_fraction = 0.2;

  TrainOptions opts;
  const unsigned hw = std::thread::hardware_concurrency();
  opts.threads = static_cast<int>(std::min(4u, hw ? hw : 1u));

  std::vector<std::vector<double>> acc(runs.size());
  for (int seed = 1; seed <= 3; ++seed) {
    SynthSpec spec;
    spec.n_samples = 1000;
    spec.duration_s = 1.0;
    spec.task = Task::kSinglelabel;
    spec.seed = 100 + static_cast<std::uint64_t>(seed);
    const Dataset data = generate(spec);

    for (std::size_t c = 0; c < runs.size(); ++c) {
      tc.seed = static_cast<std::uint64_t>(seed);
      Model m = Model::init(mel, runs[c].patch, enc, data.class_names, tc.task, target_frames,
                            tc.seed);
      const TrainOutputs out = train(std::move(m), data, tc, opts);
      acc[c].push_back(out.best_val.accuracy);
    }
  }

  std::string log;
  std::vector<double> med(runs.size());
  for (std::size_t c = 0; c < runs.size(); ++c) {
    med[c] = median3(acc[c]);
    std::snprintf(buf, sizeof buf, "%s%s=%.3f", c ? " " : "", runs[c].name, med[c]);
    log += buf;
  }

  const double chance3 = 3.0 / 6.0;  // six balanced classes
  if (med[1] < chance3 || med[3] < chance3) {
    std::snprintf(buf, sizeof buf, "below 3x chance (%s)", log.c_str());
    return {false, buf};
  }
  if (med[1] < med[3] - 0.02) {
    std::snprintf(buf, sizeof buf, "fftp trails square by more than 2 points (%s)", log.c_str());
    return {false, buf};
  }
  if (med[1] < med[0] - 0.02 || med[2] < med[1] - 0.02) {
    std::snprintf(buf, sizeof buf, "denser striding lost accuracy (%s)", log.c_str());
    return {false, buf};
  }
  return {true, log};
}

// ---- 8: end-to-end determinism ----------------------------------------------

Verdict determinism() {
  SynthSpec spec;
  spec.n_samples = 120;
  spec.duration_s = 0.5;
  spec.task = Task::kSinglelabel;
  spec.seed = 909;
  const Dataset data = generate(spec);

  MelConfig mel;
  const int target_frames = 48;
  PatchConfig patch;
  patch.mode = PatchMode::kFftp;
  patch.patch_f = 128;
  patch.patch_t = 8;
  patch.stride_f = 128;
  patch.stride_t = 8;
  EncoderConfig enc;
  enc.depth = 1;
  enc.dim = 32;
  enc.heads = 4;
  enc.mlp_ratio = 2.0;

  TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 16;
  tc.task = Task::kSinglelabel;
  tc.mixup_lambda = 0.0;
  tc.seed = 5;

  const auto dir = std::filesystem::temp_directory_path() / "fftp_acceptance_det";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);

  std::vector<std::string> history[2];
  for (int run = 0; run < 2; ++run) {
    Model m = Model::init(mel, patch, enc, data.class_names, tc.task, target_frames, tc.seed);
    TrainOptions opts;
    opts.threads = 1;
    opts.checkpoint_stem = (dir / (run ? "b" : "a")).string();
    const TrainOutputs out = train(std::move(m), data, tc, opts);
    history[run] = out.history;
  }

  const bool bins = slurp((dir / "a.bin").string()) == slurp((dir / "b.bin").string());
  const bool jsons = slurp((dir / "a.json").string()) == slurp((dir / "b.json").string());
  const bool hist = history[0] == history[1] && !history[0].empty();
  std::filesystem::remove_all(dir);
  if (!bins) return {false, "checkpoints differ"};
  if (!jsons) return {false, "checkpoint manifests differ"};
  if (!hist) return {false, "metric histories differ"};
  return {true, "checkpoints and histories byte-identical across runs"};
}

}  // namespace

int main() {
  struct Criterion {
    int index;
    const char* name;
    Verdict (*run)();
  };
  const std::vector<Criterion> criteria = {
      {1, "patch counts", patch_counts},
      {2, "conv embedding equivalence", conv_equivalence},
      {3, "specmask properties", specmask_properties},
      {4, "gradient check", gradient_check},
      {5, "attention rollout", rollout_checks},
      {6, "efficiency trend", efficiency_trend},
      {7, "desk-scale training", desk_training},
      {8, "determinism", determinism},
  };

  int failures = 0;
  for (const auto& c : criteria) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("CRITERION %d (%s): %s [%.1fs] %s\n", c.index, c.name,
                v.pass ? "PASS" : "FAIL", secs, v.detail.c_str());
    std::fflush(stdout);
    failures += v.pass ? 0 : 1;
  }
  if (failures) std::printf("%d criterion(s) failed\n", failures);
  return failures ? 1 : 0;
}
