// fftp: desk-scale spectrogram-transformer toolkit.
//
// Subcommands cover the full loop: synthesize a corpus, cache mel
// spectrograms, preview masking, count tokens, train, evaluate, render
// attention rollouts, and benchmark FLOPs/latency across patch layouts.
//
// Exit codes: 0 success, 1 runtime error, 2 invalid configuration.
// FFTP_LOG={quiet,info,debug} controls stderr chatter (default info).

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fftp/flops.hpp"
#include "fftp/pgm.hpp"
#include "fftp/runconfig.hpp"
#include "fftp/trainer.hpp"

namespace {

using namespace fftp;

int log_level() {
  const char* env = std::getenv("FFTP_LOG");
  if (!env) return 1;
  const std::string v(env);
  if (v == "quiet") return 0;
  if (v == "debug") return 2;
  return 1;
}

struct GlobalArgs {
  std::string config_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::string out_dir;
};

RunConfig resolve(const GlobalArgs& g) {
  RunConfig cfg = load_run_config(g.config_path, g.sets);
  if (g.seed) {
    cfg.train.seed = *g.seed;
    cfg.synth.seed = *g.seed;
  }
  if (!g.out_dir.empty()) cfg.paths.out_dir = g.out_dir;
  std::filesystem::create_directories(cfg.paths.out_dir);
  return cfg;
}

std::string stem_of(const std::string& path) {
  return std::filesystem::path(path).stem().string();
}

Waveform load_wav_at_rate(const std::string& path, int rate, int verbosity) {
  Waveform w = load_wav(path);
  if (w.sample_rate != rate) {
    if (verbosity >= 2)
      std::cerr << path << ": resampling " << w.sample_rate << " -> " << rate << " Hz\n";
    w = resample(w, rate);
  }
  return w;
}

Dataset load_corpus(const RunConfig& cfg, int verbosity) {
  if (cfg.paths.data_root.empty())
    throw ConfigError("paths.data_root", "required for this command");
  Dataset d = load_labeled_dir(cfg.paths.data_root, cfg.paths.labels_path());
  for (auto& w : d.waves)
    if (w.sample_rate != cfg.frontend.sample_rate) w = resample(w, cfg.frontend.sample_rate);
  if (verbosity >= 2)
    std::cerr << "corpus: " << d.size() << " clips, " << d.n_classes() << " classes\n";
  return d;
}

int max_frames(const Dataset& d, const MelConfig& mel) {
  std::int64_t best = 0;
  for (const auto& w : d.waves)
    best = std::max(best, num_frames(static_cast<std::int64_t>(w.samples.size()), mel));
  if (best < 1) throw TooShortError("corpus: every clip is shorter than one frame");
  return static_cast<int>(best);
}

int cmd_synth_gen(const RunConfig& cfg) {
  const std::string dir =
      cfg.paths.data_root.empty() ? cfg.paths.out_dir + "/corpus" : cfg.paths.data_root;
  const Dataset d = write_corpus(cfg.synth, dir);
  std::cout << "wrote " << d.size() << " clips to " << dir << " classes=";
  for (int c = 0; c < d.n_classes(); ++c) std::cout << (c ? "," : "") << d.class_names[c];
  std::cout << "\n";
  return 0;
}

int cmd_melspec(const RunConfig& cfg, const std::vector<std::string>& inputs, int verbosity) {
  for (const auto& in : inputs) {
    const Waveform w = load_wav_at_rate(in, cfg.frontend.sample_rate, verbosity);
    const MelSpectrogram s = log_mel(w, cfg.frontend);
    const std::string out = cfg.paths.out_dir + "/" + stem_of(in) + ".mels";
    write_mels(out, s);
    std::cout << in << " -> " << out << " F=" << s.F() << " T=" << s.T() << "\n";
  }
  return 0;
}

int cmd_mask(const RunConfig& cfg, const std::string& in, const std::string& kind) {
  const MelSpectrogram s = read_mels(in);
  const std::string base = cfg.paths.out_dir + "/" + stem_of(in);
  Rng rng(Rng::derive(cfg.train.seed, 0x3A5BCULL));

  write_pgm(base + ".before.pgm", s.data);
  if (kind == "specmask") {
    const SpecMaskResult res = apply_specmask(s, cfg.train.mask, rng);
    write_mels(base + ".masked.mels", res.masked);
    write_pgm(base + ".after.pgm", res.masked.data);
    std::ofstream ev(base + ".events.csv");
    ev << events_to_csv(res.events);
    if (!ev) throw IoError("cannot write " + base + ".events.csv");
    std::cout << "masked_area=" << res.map.masked_area << " n_masks=" << res.events.size()
              << " cap_exhausted=" << (res.cap_exhausted ? "true" : "false") << " out=" << base
              << ".masked.mels\n";
  } else {
    const MelSpectrogram masked = apply_specaugment(s, cfg.train.spec, rng);
    write_mels(base + ".masked.mels", masked);
    write_pgm(base + ".after.pgm", masked.data);
    std::cout << "n_masks=" << cfg.train.spec.n_t + cfg.train.spec.n_f << " out=" << base
              << ".masked.mels\n";
  }
  return 0;
}

int cmd_tokenize(const RunConfig& cfg, const std::string& in) {
  const MelSpectrogram s = read_mels(in);
  const PatchGrid g = patch_count(cfg.patch, s.F(), s.T());
  std::cout << "mode=" << to_string(cfg.patch.mode) << " patch_f=" << cfg.patch.patch_f
            << " patch_t=" << cfg.patch.patch_t << " stride_f=" << cfg.patch.stride_f
            << " stride_t=" << cfg.patch.stride_t << " n_f=" << g.n_f << " n_t=" << g.n_t
            << " patches=" << g.count() << " tokens=" << g.count() + 1 << "\n";
  return 0;
}

int cmd_train(const RunConfig& cfg, int threads, int verbosity) {
  const Dataset data = load_corpus(cfg, verbosity);
  Model model = Model::init(cfg.frontend, cfg.patch, cfg.model, data.class_names, cfg.train.task,
                            max_frames(data, cfg.frontend), cfg.train.seed);
  TrainOptions opts;
  opts.checkpoint_stem = cfg.paths.out_dir + "/model";
  opts.metrics_path = cfg.paths.out_dir + "/metrics.jsonl";
  opts.log = verbosity >= 1 ? &std::cerr : nullptr;
  opts.threads = threads;
  const TrainOutputs out = train(std::move(model), data, cfg.train, opts);
  std::cout << "best_epoch=" << out.best_epoch << " best_val="
            << out.best_val.primary(cfg.train.task) << " checkpoint=" << opts.checkpoint_stem
            << "\n";
  return 0;
}

int cmd_eval(const RunConfig& cfg, const std::string& model_stem, int threads, int verbosity) {
  const std::string stem = model_stem.empty() ? cfg.paths.out_dir + "/model" : model_stem;
  const Model m = load_model(stem);
  Dataset data = load_corpus(cfg, verbosity);
  for (auto& w : data.waves)
    if (w.sample_rate != m.mel.sample_rate) w = resample(w, m.mel.sample_rate);
  const MetricsReport r = evaluate(m, data, threads);
  nlohmann::json j = {{"loss", r.loss}};
  j[m.task == Task::kMultilabel ? "map" : "accuracy"] = r.primary(m.task);
  std::ofstream out(cfg.paths.out_dir + "/eval.json");
  out << j.dump(2) << "\n";
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_rollout(const RunConfig& cfg, const std::string& model_stem, const std::string& in,
                int verbosity) {
  const std::string stem = model_stem.empty() ? cfg.paths.out_dir + "/model" : model_stem;
  const Model m = load_model(stem);
  const Waveform w = load_wav_at_rate(in, m.mel.sample_rate, verbosity);
  const MatF heat = m.relevance_heatmap(w);
  const std::string base = cfg.paths.out_dir + "/" + stem_of(in) + ".rollout";
  write_pgm(base + ".pgm", heat, 0.0f, 1.0f);
  write_matrix_csv(base + ".csv", heat);
  std::cout << "wrote " << base << ".pgm and " << base << ".csv\n";
  return 0;
}

int cmd_bench(const RunConfig& cfg, int F, int T, int trials, bool latency,
              const std::string& convention) {
  const FlopConvention conv = flop_convention_from_string(convention);
  std::vector<PatchConfig> sweep;
  for (const auto& [pt, st] : {std::pair{50, 10}, {25, 5}, {10, 4}, {10, 2}, {10, 1}})
    sweep.push_back({F, pt, F, st, PatchMode::kFftp});
  sweep.push_back({16, 16, 10, 10, PatchMode::kSquare});

  std::vector<FlopsReport> reports;
  for (const auto& p : sweep) {
    FlopsReport r = count_flops(cfg.model, p, F, T, cfg.model.n_classes, true, conv);
    if (latency) {
      const LatencyStats ls = measure_latency(cfg.model, p, F, T, trials, cfg.train.seed);
      r.latency_ms_median = ls.median_ms;
      r.latency_ms_mean = ls.mean_ms;
      r.latency_ms_p95 = ls.p95_ms;
    }
    reports.push_back(r);
  }

  const std::string csv_path = cfg.paths.out_dir + "/bench.csv";
  std::ofstream csv(csv_path);
  csv << emit_table_csv(reports);
  if (!csv) throw IoError("cannot write " + csv_path);
  std::cout << emit_table_text(reports) << "wrote " << csv_path << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FFTP/SpecMask spectrogram-transformer toolkit"};
  app.require_subcommand(1);
  app.fallthrough();

  GlobalArgs g;
  app.add_option("--config", g.config_path, "Run-config JSON file");
  app.add_option("--set", g.sets, "Override a config key, e.g. patch.stride_t=5");
  app.add_option("--seed", g.seed, "Override train/synth seed");
  app.add_option("--threads", g.threads, "Worker threads for train/eval")
      ->check(CLI::PositiveNumber);
  app.add_option("--out", g.out_dir, "Output directory (default: paths.out_dir)");

  auto* synth_cmd = app.add_subcommand("synth-gen", "Write a synthetic labeled corpus");
  std::optional<int> synth_n;
  synth_cmd->add_option("--n", synth_n, "Number of clips");

  auto* mel_cmd = app.add_subcommand("melspec", "Cache log-mel spectrograms for WAV files");
  std::vector<std::string> mel_inputs;
  mel_cmd->add_option("wavs", mel_inputs, "Input WAV files")->required();

  auto* mask_cmd = app.add_subcommand("mask", "Mask a cached spectrogram and render previews");
  std::string mask_in, mask_kind = "specmask";
  std::optional<std::int64_t> mask_budget;
  mask_cmd->add_option("--in", mask_in, "Input .mels cache")->required();
  mask_cmd->add_option("--kind", mask_kind, "specmask or specaugment")
      ->check(CLI::IsMember({"specmask", "specaugment"}));
  mask_cmd->add_option("--budget", mask_budget, "SpecMask area budget");

  auto* tok_cmd = app.add_subcommand("tokenize", "Report the patch grid for a cached spectrogram");
  std::string tok_in;
  tok_cmd->add_option("--in", tok_in, "Input .mels cache")->required();

  auto* train_cmd = app.add_subcommand("train", "Train on the corpus at paths.data_root");
  std::optional<int> train_epochs;
  std::optional<double> train_lr;
  std::optional<int> train_batch;
  train_cmd->add_option("--epochs", train_epochs, "Epoch count");
  train_cmd->add_option("--lr", train_lr, "Peak learning rate");
  train_cmd->add_option("--batch", train_batch, "Batch size");

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a corpus");
  std::string eval_model;
  eval_cmd->add_option("--model", eval_model, "Checkpoint stem (default <out>/model)");

  auto* roll_cmd = app.add_subcommand("rollout", "Render an attention-rollout heatmap");
  std::string roll_model, roll_in;
  roll_cmd->add_option("--model", roll_model, "Checkpoint stem (default <out>/model)");
  roll_cmd->add_option("--in", roll_in, "Input WAV file")->required();

  auto* bench_cmd = app.add_subcommand("bench", "FLOPs/latency across patch layouts");
  int bench_F = 128, bench_T = 1000, bench_trials = 12;
  bool bench_no_latency = false;
  std::string bench_conv = "flops2";
  bench_cmd->add_option("--F", bench_F, "Mel bins")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--T", bench_T, "Frames")->check(CLI::PositiveNumber);
  bench_cmd->add_option("--trials", bench_trials, "Timed runs per layout (>= 10)");
  bench_cmd->add_flag("--no-latency", bench_no_latency, "Analytic FLOPs only");
  bench_cmd->add_option("--convention", bench_conv, "flops2 (MAC=2) or mac1")
      ->check(CLI::IsMember({"flops2", "mac1"}));

  CLI11_PARSE(app, argc, argv);

  const int verbosity = log_level();
  try {
    if (*synth_cmd && synth_n) g.sets.push_back("synth.n_samples=" + std::to_string(*synth_n));
    if (*mask_cmd && mask_budget)
      g.sets.push_back("mask.specmask.budget_area=" + std::to_string(*mask_budget));
    if (*train_cmd) {
      if (train_epochs) g.sets.push_back("train.epochs=" + std::to_string(*train_epochs));
      if (train_lr) g.sets.push_back("train.peak_lr=" + std::to_string(*train_lr));
      if (train_batch) g.sets.push_back("train.batch_size=" + std::to_string(*train_batch));
    }
    const RunConfig cfg = resolve(g);

    if (*synth_cmd) return cmd_synth_gen(cfg);
    if (*mel_cmd) return cmd_melspec(cfg, mel_inputs, verbosity);
    if (*mask_cmd) return cmd_mask(cfg, mask_in, mask_kind);
    if (*tok_cmd) return cmd_tokenize(cfg, tok_in);
    if (*train_cmd) return cmd_train(cfg, g.threads, verbosity);
    if (*eval_cmd) return cmd_eval(cfg, eval_model, g.threads, verbosity);
    if (*roll_cmd) return cmd_rollout(cfg, roll_model, roll_in, verbosity);
    if (*bench_cmd)
      return cmd_bench(cfg, bench_F, bench_T, bench_trials, !bench_no_latency, bench_conv);
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
