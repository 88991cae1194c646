#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "fftp/common.hpp"
#include "fftp/dataset.hpp"
#include "fftp/encoder.hpp"
#include "fftp/mel.hpp"
#include "fftp/patch.hpp"
#include "fftp/specmask.hpp"

namespace fftp {

// Mean over elements of softplus-stable binary cross-entropy with logits.
double bce_loss(const VecF& logits, const VecF& targets);
// -log softmax at the target class.
double ce_loss(const VecF& logits, int target_class);

// Gradients of the losses above w.r.t. the logits, including the mean.
VecF bce_loss_grad(const VecF& logits, const VecF& targets);
VecF ce_loss_grad(const VecF& logits, int target_class);

// Linear warmup to peak_lr over warmup_steps, then cosine decay to zero at
// total_steps. Requires 0 <= step <= total_steps and warmup_steps < total_steps.
double lr_at(std::int64_t step, double peak_lr, std::int64_t warmup_steps,
             std::int64_t total_steps);

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Moments concatenated in view order; sized lazily on the first step.
struct AdamState {
  std::int64_t step_count = 0;
  std::vector<float> m, v;
};

// Decoupled weight decay (param *= 1 - lr*wd), then the bias-corrected Adam
// update. params and grads must be view lists of identical shape.
void adamw_step(const std::vector<TensorView<float>>& params,
                const std::vector<TensorView<float>>& grads, AdamState& state, double lr,
                double weight_decay, const AdamConfig& acfg = {});

// Per class: rank by descending score (ties by ascending sample index),
// AP = mean over positives of precision at each positive's rank. Classes
// without positives are skipped; AP slots for them are set to -1. Throws
// MetricError when no class has a positive.
std::pair<double, VecF> mean_average_precision(const MatF& scores, const MatF& targets);

// Fraction of rows whose argmax score hits the argmax target (first index
// wins ties).
double accuracy(const MatF& scores, const MatF& targets);

// x = lambda*x1 + (1-lambda)*x2 over the overlapping prefix (trimmed to the
// shorter waveform); y mixes the full label vectors.
std::pair<Waveform, VecF> mixup(const Waveform& a, const Waveform& b, const VecF& ya,
                                const VecF& yb, double lambda);

enum class Augmentation { kNone, kSpecAugment, kSpecMask };

std::string to_string(Augmentation a);
Augmentation augmentation_from_string(const std::string& s);

struct TrainConfig {
  int epochs = 10;
  int batch_size = 32;
  double peak_lr = 1e-3;
  std::int64_t warmup_steps = -1;  // -1: 10% of total steps (at least 1)
  double weight_decay = 0.01;
  std::uint64_t seed = 0;
  Task task = Task::kMultilabel;
  double mixup_lambda = 0.5;  // multilabel only; 0 disables
  Augmentation augmentation = Augmentation::kNone;
  double val_fraction = 0.2;
  SpecMaskConfig mask;       // used when augmentation == kSpecMask
  SpecAugmentConfig spec;    // used when augmentation == kSpecAugment
};

void validate(const TrainConfig& cfg);

struct MetricsReport {
  double loss = 0.0;
  double map = 0.0;       // multilabel
  double accuracy = 0.0;  // singlelabel
  VecF per_class_ap;      // multilabel; -1 marks classes without positives

  // The model-selection scalar: mAP or accuracy depending on task.
  double primary(Task t) const { return t == Task::kMultilabel ? map : accuracy; }
};

// Full inference stack: frontend config, preprocessing constants, patch
// geometry, embedding, encoder, class map.
struct Model {
  MelConfig mel;
  int target_frames = 0;  // spectrograms are padded/trimmed to this many frames
  bool normalize = true;
  float norm_mean = 0.0f;  // corpus statistics, filled in by train()
  float norm_std = 1.0f;
  PatchConfig patch;
  EmbeddingWeights embed;
  EncoderParams<float> enc;
  std::vector<std::string> class_names;
  Task task = Task::kMultilabel;

  int n_classes() const { return static_cast<int>(class_names.size()); }

  // Random initialization (embedding then encoder, one stream). Sets
  // enc.cfg.n_classes from class_names and max_tokens from the patch grid.
  static Model init(const MelConfig& mel, const PatchConfig& patch, EncoderConfig enc_cfg,
                    std::vector<std::string> class_names, Task task, int target_frames,
                    std::uint64_t seed);

  // log_mel -> pad/trim (padding with the clip mean) -> optional
  // (x - norm_mean)/norm_std. Augmentation, when any, runs between the pad
  // and the normalization; see train().
  MelSpectrogram frontend_raw(const Waveform& w) const;
  MatF apply_norm(const MelSpectrogram& s) const;

  // Patches -> tokens -> class token + positions.
  TokenSequence tokenize(const MatF& normalized) const;

  VecF logits(const Waveform& w) const;
  // Class-token relevance over patches (rollout row 0, class column dropped),
  // painted back onto the F x target_frames grid in [0, 1].
  MatF relevance_heatmap(const Waveform& w) const;
};

// Parameter views in checkpoint order: embedding, then encoder tensors.
std::vector<TensorView<float>> model_views(Model& m);

void save_model(const Model& m, const std::string& stem);
Model load_model(const std::string& stem);

struct TrainOptions {
  std::string checkpoint_stem;  // when set, the best-validation model is kept here
  std::string metrics_path;     // when set, one JSON line per epoch is appended here
  std::ostream* log = nullptr;
  int threads = 1;
};

struct TrainOutputs {
  Model best;
  int best_epoch = 0;  // 1-based
  MetricsReport best_val;
  std::vector<std::string> history;  // JSON lines, one per epoch
};

// Splits off a validation set, computes normalization statistics from the
// training split, then runs epochs of
//   mixup (multilabel) -> log-mel -> augmentation -> normalize -> patches
//   -> encoder -> loss -> AdamW
// with a warmup+cosine schedule. Evaluates every epoch and keeps the best
// model by validation mAP/accuracy. Throws NumericError on a non-finite loss.
TrainOutputs train(Model model, const Dataset& data, const TrainConfig& cfg,
                   const TrainOptions& opts = {});

MetricsReport evaluate(const Model& m, const Dataset& data, int threads = 1);

}  // namespace fftp
