#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "rlab/ctc.hpp"
#include "rlab/data.hpp"
#include "rlab/freeze.hpp"
#include "rlab/optimizer.hpp"
#include "rlab/replay.hpp"
#include "rlab/wer.hpp"

namespace py = pybind11;
using namespace rlab;

namespace {

py::dict wer_py(const std::string& reference, const std::string& hypothesis, bool lowercase,
                bool strip_punctuation, bool collapse_whitespace, bool sz_to_ss) {
    NormalizerConfig cfg{lowercase, strip_punctuation, collapse_whitespace, sz_to_ss};
    const WerBreakdown b = wer(reference, hypothesis, cfg);
    py::dict out;
    out["substitutions"] = b.substitutions;
    out["insertions"] = b.insertions;
    out["deletions"] = b.deletions;
    out["hits"] = b.hits;
    out["ref_words"] = b.ref_words;
    out["wer"] = b.wer;
    return out;
}

py::dict preset_py(const std::string& name, int encoder_depth, int decoder_depth,
                   const std::string& scope) {
    const LayerConfig cfg = preset(name, encoder_depth, decoder_depth, parse_scope(scope));
    py::dict out;
    out["encoder"] = std::vector<int>(cfg.encoder_trainable.begin(), cfg.encoder_trainable.end());
    out["decoder"] = std::vector<int>(cfg.decoder_trainable.begin(), cfg.decoder_trainable.end());
    out["head_trainable"] = cfg.head_trainable;
    out["input_projection_trainable"] = cfg.input_projection_trainable;
    return out;
}

py::list replay_stats_py(int64_t new_train, int64_t orig_train, double ratio, uint64_t seed,
                         int batch_size, int epochs) {
    const MixedSchedule schedule =
        build_schedule(new_train, orig_train, ReplayPolicy{ratio, seed}, batch_size, epochs);
    py::list out;
    for (const EpochProvenance& p : provenance_stats(schedule)) {
        py::dict epoch;
        epoch["new_count"] = p.new_count;
        epoch["replay_count"] = p.replay_count;
        epoch["batches"] = p.per_batch.size();
        epoch["max_gap"] = p.max_gap == kNoReplayGap ? py::object(py::none())
                                                     : py::object(py::int_(p.max_gap));
        out.append(epoch);
    }
    return out;
}

py::list generate_py(const std::string& domain, const std::string& split, bool with_features) {
    DomainSpec spec;
    if (domain == "G")
        spec = default_domain_G();
    else if (domain == "S")
        spec = default_domain_S();
    else
        throw ConfigError("domain must be G or S");
    py::list out;
    for (const Utterance& u : generate_domain(spec, parse_split(split))) {
        py::dict rec;
        rec["id"] = u.id;
        rec["speaker"] = u.speaker;
        rec["domain"] = std::string(1, u.domain);
        rec["transcript"] = u.transcript;
        rec["frames"] = u.features.shape[0];
        if (with_features) rec["features"] = u.features.data;
        out.append(rec);
    }
    return out;
}

double ctc_loss_py(const std::vector<std::vector<double>>& logits, const std::vector<int>& target,
                   int blank) {
    if (logits.empty()) throw ArgumentError("empty logits");
    const int64_t frames = static_cast<int64_t>(logits.size());
    const int64_t vocab = static_cast<int64_t>(logits[0].size());
    Tensor<double> t({frames, vocab});
    for (int64_t r = 0; r < frames; ++r) {
        if (static_cast<int64_t>(logits[static_cast<size_t>(r)].size()) != vocab)
            throw ArgumentError("ragged logits");
        for (int64_t c = 0; c < vocab; ++c) t(r, c) = logits[static_cast<size_t>(r)][static_cast<size_t>(c)];
    }
    Tape<double> tape;
    return tape.value(ctc_loss(tape.constant(t), target, blank)).data[0];
}

std::vector<int> greedy_ctc_py(const std::vector<std::vector<double>>& logits, int blank) {
    if (logits.empty()) return {};
    const int64_t frames = static_cast<int64_t>(logits.size());
    const int64_t vocab = static_cast<int64_t>(logits[0].size());
    Tensor<double> t({frames, vocab});
    for (int64_t r = 0; r < frames; ++r)
        for (int64_t c = 0; c < vocab; ++c) t(r, c) = logits[static_cast<size_t>(r)][static_cast<size_t>(c)];
    return greedy_decode_ctc(t, blank);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "replay-lab core: WER scoring, layer presets, replay schedules, synthetic data";

    py::register_exception<ConfigError>(m, "ConfigError");
    py::register_exception<ArgumentError>(m, "ArgumentError");

    m.def("normalize",
          [](const std::string& text, bool lowercase, bool strip_punctuation,
             bool collapse_whitespace, bool sz_to_ss) {
              return normalize(text, NormalizerConfig{lowercase, strip_punctuation,
                                                      collapse_whitespace, sz_to_ss});
          },
          py::arg("text"), py::arg("lowercase") = true, py::arg("strip_punctuation") = true,
          py::arg("collapse_whitespace") = true, py::arg("sz_to_ss") = false,
          "Normalize a transcript before scoring.");

    m.def("wer", &wer_py, py::arg("reference"), py::arg("hypothesis"), py::arg("lowercase") = true,
          py::arg("strip_punctuation") = true, py::arg("collapse_whitespace") = true,
          py::arg("sz_to_ss") = false,
          "Word error rate with substitution/insertion/deletion breakdown.");

    m.def("lr_at",
          [](double peak_lr, int64_t warmup_steps, int64_t total_steps, int64_t step) {
              return lr_at(ScheduleConfig{peak_lr, warmup_steps, total_steps}, step);
          },
          py::arg("peak_lr"), py::arg("warmup_steps"), py::arg("total_steps"), py::arg("step"),
          "Warmup + linear-decay learning rate at a step.");

    m.def("preset", &preset_py, py::arg("name"), py::arg("encoder_depth"),
          py::arg("decoder_depth") = 0, py::arg("scope") = "both",
          "Trainable layer indices for a named fine-tuning configuration.");

    m.def("replay_schedule_stats", &replay_stats_py, py::arg("new_train"), py::arg("orig_train"),
          py::arg("ratio"), py::arg("seed") = 0, py::arg("batch_size") = 32, py::arg("epochs") = 1,
          "Per-epoch provenance of a mixed experience-replay schedule.");

    m.def("generate_dataset", &generate_py, py::arg("domain"), py::arg("split") = "train",
          py::arg("with_features") = false,
          "Synthetic utterances for domain G or S (deterministic).");

    m.def("ctc_loss", &ctc_loss_py, py::arg("logits"), py::arg("target"), py::arg("blank") = 0,
          "Negative log-likelihood over all CTC alignments (log-space forward algorithm).");

    m.def("greedy_ctc", &greedy_ctc_py, py::arg("logits"), py::arg("blank") = 0,
          "Greedy CTC decoding: per-frame argmax, collapse repeats, drop blanks.");
}
