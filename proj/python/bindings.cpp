// _fftp: thin numpy-facing veneer over the C++ core. Spectrograms cross
// the boundary as float32 (F, T) arrays, waveforms as float32 1-d arrays.

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "fftp/flops.hpp"
#include "fftp/mel.hpp"
#include "fftp/patch.hpp"
#include "fftp/runconfig.hpp"
#include "fftp/specmask.hpp"
#include "fftp/synthdata.hpp"
#include "fftp/trainer.hpp"
#include "fftp/wav.hpp"

namespace py = pybind11;
using namespace fftp;

namespace {

Waveform to_wave(const Eigen::Ref<const VecF>& samples, int sample_rate) {
  Waveform w;
  w.samples.assign(samples.data(), samples.data() + samples.size());
  w.sample_rate = sample_rate;
  return w;
}

MelSpectrogram to_spec(MatF data) { return MelSpectrogram{std::move(data)}; }

Waveform at_model_rate(const Model& m, const Eigen::Ref<const VecF>& samples, int sample_rate) {
  Waveform w = to_wave(samples, sample_rate);
  if (w.sample_rate != m.mel.sample_rate) w = resample(w, m.mel.sample_rate);
  return w;
}

}  // namespace

PYBIND11_MODULE(_fftp, m) {
  m.doc() = "Full-frequency temporal patching, SpecMask, and a compact "
            "spectrogram transformer";

  // Translators run newest-first, so the ConfigError one must be registered
  // after the base Error one to win for config failures.
  py::register_exception<Error>(m, "FftpError", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "FftpConfigError", PyExc_ValueError);

  m.def(
      "load_wav",
      [](const std::string& path) {
        const Waveform w = load_wav(path);
        VecF s = Eigen::Map<const VecF>(w.samples.data(), w.samples.size());
        return py::make_tuple(s, w.sample_rate);
      },
      py::arg("path"), "PCM16 WAV -> (float32 samples in [-1, 1], sample_rate)");

  m.def(
      "save_wav",
      [](const std::string& path, const Eigen::Ref<const VecF>& samples, int sample_rate) {
        return save_wav(path, to_wave(samples, sample_rate));
      },
      py::arg("path"), py::arg("samples"), py::arg("sample_rate"),
      "Returns True when samples clipped during quantization");

  m.def(
      "resample",
      [](const Eigen::Ref<const VecF>& samples, int sample_rate, int target_rate) {
        const Waveform w = resample(to_wave(samples, sample_rate), target_rate);
        return VecF(Eigen::Map<const VecF>(w.samples.data(), w.samples.size()));
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("target_rate"));

  m.def(
      "log_mel",
      [](const Eigen::Ref<const VecF>& samples, int sample_rate, int n_mels,
         double frame_shift_ms, double frame_length_ms, int n_fft) {
        MelConfig cfg;
        cfg.sample_rate = sample_rate;
        cfg.n_mels = n_mels;
        cfg.frame_shift_ms = frame_shift_ms;
        cfg.frame_length_ms = frame_length_ms;
        cfg.n_fft = n_fft;
        return log_mel(to_wave(samples, sample_rate), cfg).data;
      },
      py::arg("samples"), py::arg("sample_rate"), py::arg("n_mels") = 128,
      py::arg("frame_shift_ms") = 10.0, py::arg("frame_length_ms") = 25.0,
      py::arg("n_fft") = 1024, "Natural-log mel spectrogram, shape (n_mels, frames)");

  m.def(
      "pad_or_trim",
      [](const Eigen::Ref<const MatF>& spec, int target_t, float pad_value) {
        return pad_or_trim(to_spec(spec), target_t, pad_value).data;
      },
      py::arg("spec"), py::arg("target_t"), py::arg("pad_value") = 0.0f);

  m.def(
      "patch_count",
      [](int F, int T, int patch_f, int patch_t, int stride_f, int stride_t,
         const std::string& mode) {
        const PatchConfig cfg{patch_f, patch_t, stride_f, stride_t, patch_mode_from_string(mode)};
        const PatchGrid g = patch_count(cfg, F, T);
        return py::make_tuple(g.n_f, g.n_t);
      },
      py::arg("F"), py::arg("T"), py::arg("patch_f"), py::arg("patch_t"), py::arg("stride_f"),
      py::arg("stride_t"), py::arg("mode") = "fftp", "Patch grid (n_f, n_t)");

  m.def(
      "extract_patches",
      [](const Eigen::Ref<const MatF>& spec, int patch_f, int patch_t, int stride_f, int stride_t,
         const std::string& mode) {
        const PatchConfig cfg{patch_f, patch_t, stride_f, stride_t, patch_mode_from_string(mode)};
        return extract_patches(to_spec(spec), cfg);
      },
      py::arg("spec"), py::arg("patch_f"), py::arg("patch_t"), py::arg("stride_f"),
      py::arg("stride_t"), py::arg("mode") = "fftp",
      "Flattened patches, shape (n_f*n_t, patch_f*patch_t), time-fastest rows");

  m.def(
      "embed",
      [](const Eigen::Ref<const MatF>& patches, const Eigen::Ref<const MatF>& w,
         const Eigen::Ref<const VecF>& b) {
        EmbeddingWeights e;
        e.w = w;
        e.b = b;
        const PatchGrid g{1, static_cast<int>(patches.rows())};
        return embed(patches, g, e).tokens;
      },
      py::arg("patches"), py::arg("w"), py::arg("b"),
      "Linear patch embedding: patches (N, P) x w (D, P)^T + b -> (N, D)");

  m.def(
      "apply_specmask",
      [](const Eigen::Ref<const MatF>& spec, std::uint64_t seed, std::int64_t budget_area,
         int max_h, int max_w, double full_freq_prob, const std::string& fill) {
        SpecMaskConfig cfg;
        cfg.budget_area = budget_area;
        cfg.max_h = max_h;
        cfg.max_w = max_w;
        cfg.full_freq_prob = full_freq_prob;
        cfg.fill = mask_fill_from_string(fill);
        Rng rng(seed);
        const SpecMaskResult res = apply_specmask(to_spec(spec), cfg, rng);
        py::list events;
        for (const auto& e : res.events)
          events.append(py::make_tuple(e.x, e.y, e.h, e.w, to_string(e.kind)));
        return py::make_tuple(res.masked.data, res.map.m, events);
      },
      py::arg("spec"), py::arg("seed"), py::arg("budget_area") = 25600, py::arg("max_h") = 128,
      py::arg("max_w") = 128, py::arg("full_freq_prob") = 0.7, py::arg("fill") = "mean",
      "-> (masked spec, uint8 mask map, [(x, y, h, w, kind), ...])");

  m.def(
      "apply_specaugment",
      [](const Eigen::Ref<const MatF>& spec, std::uint64_t seed, int max_t, int max_f, int n_t,
         int n_f) {
        Rng rng(seed);
        return apply_specaugment(to_spec(spec), max_t, max_f, n_t, n_f, rng).data;
      },
      py::arg("spec"), py::arg("seed"), py::arg("max_t") = 400, py::arg("max_f") = 5,
      py::arg("n_t") = 2, py::arg("n_f") = 2);

  m.def(
      "attention_rollout",
      [](const py::sequence& per_layer) {
        AttentionTrace<float> trace;
        trace.reserve(py::len(per_layer));
        for (const auto& item : per_layer) {
          auto arr = py::array_t<float, py::array::c_style | py::array::forcecast>::ensure(
              py::reinterpret_borrow<py::object>(item));
          if (!arr || arr.ndim() != 2)
            throw InvalidArgument("attention_rollout: each layer must be a 2-d array");
          using RowMajor = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
          trace.emplace_back(
              Eigen::Map<const RowMajor>(arr.data(), arr.shape(0), arr.shape(1)));
        }
        return attention_rollout(trace);
      },
      py::arg("per_layer"),
      "Head-averaged per-layer attention (N, N) matrices -> rollout matrix");

  m.def(
      "count_flops",
      [](int depth, int dim, int heads, double mlp_ratio, int n_classes, int F, int T, int patch_f,
         int patch_t, int stride_f, int stride_t, const std::string& mode,
         const std::string& convention) {
        EncoderConfig enc;
        enc.depth = depth;
        enc.dim = dim;
        enc.heads = heads;
        enc.mlp_ratio = mlp_ratio;
        enc.n_classes = n_classes;
        const PatchConfig p{patch_f, patch_t, stride_f, stride_t, patch_mode_from_string(mode)};
        const FlopsReport r =
            count_flops(enc, p, F, T, n_classes, true, flop_convention_from_string(convention));
        py::dict d;
        d["n_patches"] = r.n_patches;
        d["tokens"] = r.tokens;
        d["patch_embed_flops"] = r.patch_embed_flops;
        d["attn_linear_flops"] = r.attn_linear_flops;
        d["attn_matmul_flops"] = r.attn_matmul_flops;
        d["mlp_flops"] = r.mlp_flops;
        d["head_flops"] = r.head_flops;
        d["total_flops"] = r.total_flops;
        return d;
      },
      py::arg("depth"), py::arg("dim"), py::arg("heads"), py::arg("mlp_ratio"),
      py::arg("n_classes"), py::arg("F"), py::arg("T"), py::arg("patch_f"), py::arg("patch_t"),
      py::arg("stride_f"), py::arg("stride_t"), py::arg("mode") = "fftp",
      py::arg("convention") = "flops2");

  py::class_<Model>(m, "Model")
      .def_static("load", &load_model, py::arg("stem"),
                  "Load a checkpoint saved by the trainer (stem.json + stem.bin)")
      .def_property_readonly("class_names", [](const Model& m_) { return m_.class_names; })
      .def_property_readonly("task", [](const Model& m_) { return to_string(m_.task); })
      .def_property_readonly("sample_rate", [](const Model& m_) { return m_.mel.sample_rate; })
      .def(
          "logits",
          [](const Model& m_, const Eigen::Ref<const VecF>& samples, int sample_rate) {
            return m_.logits(at_model_rate(m_, samples, sample_rate));
          },
          py::arg("samples"), py::arg("sample_rate"))
      .def(
          "rollout",
          [](const Model& m_, const Eigen::Ref<const VecF>& samples, int sample_rate) {
            return m_.relevance_heatmap(at_model_rate(m_, samples, sample_rate));
          },
          py::arg("samples"), py::arg("sample_rate"),
          "Attention-rollout relevance painted over the spectrogram, in [0, 1]");

  m.def(
      "write_corpus",
      [](const std::string& dir, int n_samples, double duration_s, int sample_rate,
         const std::string& task, std::uint64_t seed) {
        SynthSpec spec;
        spec.n_samples = n_samples;
        spec.duration_s = duration_s;
        spec.sample_rate = sample_rate;
        spec.task = task_from_string(task);
        spec.seed = seed;
        const Dataset d = write_corpus(spec, dir);
        return py::make_tuple(d.size(), d.class_names);
      },
      py::arg("dir"), py::arg("n_samples") = 100, py::arg("duration_s") = 1.0,
      py::arg("sample_rate") = 16000, py::arg("task") = "singlelabel", py::arg("seed") = 0,
      "Synthesize a labeled WAV corpus; returns (n_clips, class_names)");
}
