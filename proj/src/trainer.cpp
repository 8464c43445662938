#include "rlab/trainer.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "rlab/csv.hpp"
#include "rlab/ctc.hpp"
#include "rlab/decode.hpp"
#include "rlab/parallel.hpp"

namespace rlab {

namespace {

// Gradient contribution of one utterance, kept until the whole batch is
// accumulated so that summation order (and therefore the result, bit for
// bit) does not depend on the number of worker threads.
struct UtteranceGrads {
    double loss = 0.0;
    std::vector<std::pair<Parameter<float>*, Tensor<float>>> grads;
};

UtteranceGrads utterance_grads(Model<float>& model, const Utterance& utt, Rng dropout_rng,
                               double label_smoothing) {
    Tape<float> tape;
    Value<float> loss;
    const Vocab& vocab = model.config.vocab;
    const std::vector<int> ids = vocab.encode(utt.transcript);
    if (model.config.arch == Arch::EncCtc) {
        Value<float> logits = forward_ctc(model, tape, utt.features, true, dropout_rng);
        loss = ctc_loss(logits, ids, vocab.blank_id);
    } else {
        std::vector<int> prefix;
        prefix.reserve(ids.size() + 1);
        prefix.push_back(vocab.bos_id);
        prefix.insert(prefix.end(), ids.begin(), ids.end());
        std::vector<int> labels = ids;
        labels.push_back(vocab.eos_id);
        Value<float> logits = forward_encdec(model, tape, utt.features, prefix, true, dropout_rng);
        loss = cross_entropy(logits, labels, label_smoothing);
    }
    tape.backward(loss);
    UtteranceGrads out;
    out.loss = static_cast<double>(tape.value(loss).data[0]);
    for (auto& [p, g] : tape.param_grads()) out.grads.emplace_back(p, *g);
    return out;
}

// One optimizer step over a batch; returns the mean per-utterance loss.
double train_batch(Model<float>& model, const std::vector<const Utterance*>& batch,
                   AdamW<float>& opt, double lr, const Rng& step_rng, const TrainSpec& spec) {
    const size_t n = batch.size();
    std::vector<UtteranceGrads> parts(n);
    parallel_for(static_cast<int64_t>(n), spec.threads, [&](int64_t i) {
        parts[static_cast<size_t>(i)] =
            utterance_grads(model, *batch[static_cast<size_t>(i)],
                            step_rng.split("utt", static_cast<uint64_t>(i)), spec.label_smoothing);
    });
    double loss_sum = 0.0;
    const float inv_n = 1.0f / static_cast<float>(n);
    for (const UtteranceGrads& part : parts) {
        loss_sum += part.loss;
        for (const auto& [p, g] : part.grads)
            for (int64_t i = 0; i < g.numel(); ++i) p->gradient.data[i] += inv_n * g.data[i];
    }
    Model<float>::visit(model, [](Parameter<float>& p) { p.has_grad = true; });
    model.grads_ready = true;
    opt.step(lr);
    model.grads_ready = false;
    return loss_sum / static_cast<double>(n);
}

// Loss runaway detection; state carried across steps of one run.
struct DivergenceGuard {
    double factor;
    int patience;
    double initial = -1.0;
    int over = 0;

    void observe(double loss, int64_t step) {
        if (!std::isfinite(loss))
            throw DivergenceError("non-finite loss at step " + std::to_string(step));
        if (initial < 0) initial = std::max(loss, 1e-12);
        over = (loss > factor * initial) ? over + 1 : 0;
        if (over >= patience)
            throw DivergenceError("loss exceeded " + format_double(factor) +
                                  "x its initial value for " + std::to_string(patience) +
                                  " consecutive steps (step " + std::to_string(step) + ")");
    }
};

std::vector<const Utterance*> subset_ptrs(const std::vector<Utterance>& data, size_t limit) {
    std::vector<const Utterance*> out;
    out.reserve(std::min(limit, data.size()));
    for (size_t i = 0; i < data.size() && i < limit; ++i) out.push_back(&data[i]);
    return out;
}

double corpus_wer(Model<float>& model, const std::vector<const Utterance*>& data,
                  const NormalizerConfig& norm, int threads) {
    if (data.empty()) throw ArgumentError("cannot evaluate WER on an empty dataset");
    std::vector<std::string> hyps(data.size());
    parallel_for(static_cast<int64_t>(data.size()), threads, [&](int64_t i) {
        hyps[static_cast<size_t>(i)] = transcribe(model, data[static_cast<size_t>(i)]->features);
    });
    int64_t edits = 0, ref_words = 0;
    for (size_t i = 0; i < data.size(); ++i) {
        const WerBreakdown b = wer(data[i]->transcript, hyps[i], norm);
        edits += b.edits();
        ref_words += b.ref_words;
    }
    return static_cast<double>(edits) / static_cast<double>(ref_words);
}

void persist_run(const TrainSpec& spec, const Model<float>& model, const AdamW<float>& opt,
                 const ScheduleConfig& schedule, RunRecord& record) {
    if (spec.run_dir.empty()) return;
    std::filesystem::create_directories(spec.run_dir);
    record.checkpoint_path = spec.run_dir / "checkpoint.ckpt";
    CheckpointExtra extra;
    extra.optimizer_steps = opt.steps_done();
    extra.schedule = schedule;
    extra.seed = spec.seed;
    extra.rng_key = Rng::seeded(spec.seed).key();
    extra.rng_counter = 0;
    save_checkpoint(record.checkpoint_path, model, extra);
    write_run_csv(record, spec.run_dir / "curve.csv");
}

}  // namespace

double evaluate_wer(Model<float>& model, const std::vector<Utterance>& data,
                    const NormalizerConfig& norm, int threads) {
    return corpus_wer(model, subset_ptrs(data, data.size()), norm, threads);
}

PretrainResult pretrain(const TrainSpec& spec, const DomainData& G) {
    if (G.train.empty() || G.dev.empty() || G.test.empty())
        throw ArgumentError("pretrain needs train, dev and test splits for domain G");
    PretrainResult result;
    result.record.run_id = spec.run_id;
    result.record.seed = spec.seed;
    result.model = build_model<float>(spec.model, Rng::seeded(spec.seed).split("init"));
    Model<float>& model = result.model;
    apply_layer_config(model, full_trainable(spec.model));

    const int64_t n = static_cast<int64_t>(G.train.size());
    const int64_t batches_per_epoch = (n + spec.batch_size - 1) / spec.batch_size;
    ScheduleConfig schedule{spec.pretrain_peak_lr, spec.warmup_steps,
                            batches_per_epoch * spec.pretrain_max_epochs};
    schedule.validate();
    AdamW<float> opt(model.parameters(), spec.opt);
    DivergenceGuard guard{spec.divergence_factor, spec.divergence_patience};
    const Rng root = Rng::seeded(spec.seed);

    const auto dev_subset = subset_ptrs(G.dev, static_cast<size_t>(spec.eval_G_subset));
    const auto test_subset = subset_ptrs(G.test, static_cast<size_t>(spec.eval_G_subset));

    int64_t step = 0;
    for (int epoch = 1; epoch <= spec.pretrain_max_epochs; ++epoch) {
        std::vector<int64_t> order(static_cast<size_t>(n));
        for (int64_t i = 0; i < n; ++i) order[static_cast<size_t>(i)] = i;
        Rng shuffle_rng = root.split("order", static_cast<uint64_t>(epoch));
        for (size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[shuffle_rng.next_below(static_cast<uint64_t>(i))]);

        double loss_sum = 0.0;
        int64_t loss_count = 0;
        for (int64_t start = 0; start < n; start += spec.batch_size) {
            std::vector<const Utterance*> batch;
            for (int64_t i = start; i < std::min<int64_t>(n, start + spec.batch_size); ++i)
                batch.push_back(&G.train[static_cast<size_t>(order[static_cast<size_t>(i)])]);
            ++step;
            const double lr = lr_at(schedule, step);
            const double loss = train_batch(model, batch, opt, lr,
                                            root.split("step", static_cast<uint64_t>(step)), spec);
            guard.observe(loss, step);
            loss_sum += loss;
            ++loss_count;
        }
        const double dev_wer = corpus_wer(model, dev_subset, spec.norm, spec.threads);
        const double test_wer = corpus_wer(model, test_subset, spec.norm, spec.threads);
        result.record.points.push_back(EvalPoint{step, epoch, lr_at(schedule, step),
                                                 loss_sum / static_cast<double>(loss_count),
                                                 std::nan(""), test_wer});
        if (dev_wer <= spec.pretrain_target_wer) break;
    }
    persist_run(spec, model, opt, schedule, result.record);
    return result;
}

RunRecord finetune(Model<float>& model, const TrainSpec& spec, const DomainData& S,
                   const std::vector<Utterance>& G_train, const std::vector<Utterance>& G_eval,
                   const MixedSchedule& schedule) {
    if (S.train.empty() || S.test.empty())
        throw ArgumentError("finetune needs train and test splits for domain S");
    if (schedule.epochs.empty()) throw ArgumentError("finetune needs a non-empty schedule");

    LayerConfig layers = spec.layers;
    // XLS-R analog: the feature-extractor stand-in stays frozen while fine-tuning
    if (model.config.arch == Arch::EncCtc && spec.freeze_input_projection)
        layers.input_projection_trainable = false;
    apply_layer_config(model, layers);
    const auto frozen_snapshot = snapshot_frozen(model);

    RunRecord record;
    record.run_id = spec.run_id;
    record.seed = spec.seed;

    ScheduleConfig lr_schedule{spec.peak_lr, spec.warmup_steps, schedule.total_steps()};
    lr_schedule.validate();
    AdamW<float> opt(model.parameters(), spec.opt);
    DivergenceGuard guard{spec.divergence_factor, spec.divergence_patience};
    const Rng root = Rng::seeded(spec.seed);
    const auto g_subset = subset_ptrs(G_eval, static_cast<size_t>(spec.eval_G_subset));
    const auto s_subset = subset_ptrs(S.test, S.test.size());

    record.points.push_back(EvalPoint{0, 0, lr_at(lr_schedule, 0), std::nan(""),
                                      corpus_wer(model, s_subset, spec.norm, spec.threads),
                                      corpus_wer(model, g_subset, spec.norm, spec.threads)});

    int64_t step = 0;
    for (size_t epoch = 0; epoch < schedule.epochs.size(); ++epoch) {
        double loss_sum = 0.0;
        int64_t loss_count = 0;
        for (const std::vector<SampleRef>& refs : schedule.epochs[epoch]) {
            std::vector<const Utterance*> batch;
            batch.reserve(refs.size());
            for (const SampleRef& ref : refs) {
                const auto& source = ref.replay ? G_train : S.train;
                if (ref.index < 0 || static_cast<size_t>(ref.index) >= source.size())
                    throw ArgumentError("schedule references sample " + std::to_string(ref.index) +
                                        " outside the dataset");
                batch.push_back(&source[static_cast<size_t>(ref.index)]);
            }
            ++step;
            const double lr = lr_at(lr_schedule, step);
            const double loss = train_batch(model, batch, opt, lr,
                                            root.split("step", static_cast<uint64_t>(step)), spec);
            guard.observe(loss, step);
            loss_sum += loss;
            ++loss_count;
        }
        if (!frozen_unchanged(model, frozen_snapshot))
            throw FrozenViolationError("frozen parameters changed during epoch " +
                                       std::to_string(epoch + 1));
        record.points.push_back(EvalPoint{step, static_cast<int>(epoch + 1),
                                          lr_at(lr_schedule, step),
                                          loss_sum / static_cast<double>(loss_count),
                                          corpus_wer(model, s_subset, spec.norm, spec.threads),
                                          corpus_wer(model, g_subset, spec.norm, spec.threads)});
    }
    persist_run(spec, model, opt, lr_schedule, record);
    return record;
}

void write_run_csv(const RunRecord& record, const std::filesystem::path& path) {
    if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);  // binary: no platform newline translation
    if (!os) throw IoError("cannot write run csv " + path.string());
    os << "run_id,seed,step,epoch,lr,train_loss,wer_S,wer_G\n";
    for (const EvalPoint& p : record.points) {
        os << record.run_id << ',' << record.seed << ',' << p.step << ',' << p.epoch << ','
           << format_double(p.lr) << ',' << format_double(p.train_loss) << ','
           << format_double(p.wer_S) << ',' << format_double(p.wer_G) << '\n';
    }
}

RunRecord read_run_csv(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open run csv " + path.string());
    std::string line;
    if (!std::getline(is, line) || line != "run_id,seed,step,epoch,lr,train_loss,wer_S,wer_G")
        throw IoError("unexpected header in " + path.string());
    RunRecord record;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> f = split_csv_line(line);
        if (f.size() != 8) throw IoError("bad row in " + path.string() + ": " + line);
        record.run_id = f[0];
        record.seed = static_cast<uint64_t>(std::stoull(f[1]));
        EvalPoint p;
        p.step = std::stoll(f[2]);
        p.epoch = std::stoi(f[3]);
        p.lr = parse_double(f[4]);
        p.train_loss = parse_double(f[5]);
        p.wer_S = parse_double(f[6]);
        p.wer_G = parse_double(f[7]);
        record.points.push_back(p);
    }
    return record;
}

}  // namespace rlab
