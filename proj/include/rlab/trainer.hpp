#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "rlab/checkpoint.hpp"
#include "rlab/data.hpp"
#include "rlab/freeze.hpp"
#include "rlab/model.hpp"
#include "rlab/optimizer.hpp"
#include "rlab/replay.hpp"
#include "rlab/wer.hpp"

namespace rlab {

struct TrainSpec {
    ModelConfig model;
    int epochs = 5;
    int batch_size = 32;
    double peak_lr = 3e-4;          // fine-tuning
    double pretrain_peak_lr = 2e-3;
    int64_t warmup_steps = 50;
    AdamWConfig opt;
    double label_smoothing = 0.0;
    LayerConfig layers;  // fine-tuning freeze configuration
    bool freeze_input_projection = true;  // CTC fine-tuning keeps the input projection frozen
    ReplayPolicy replay;
    NormalizerConfig norm;
    uint64_t seed = 1;
    int eval_G_subset = 500;
    double pretrain_target_wer = 0.08;  // dev WER that ends pretraining early
    int pretrain_max_epochs = 4;
    double divergence_factor = 10.0;  // abort when loss exceeds factor * initial ...
    int divergence_patience = 50;     // ... for this many consecutive steps
    int threads = 1;
    std::string run_id = "run";
    std::filesystem::path run_dir;  // when set, curve.csv + checkpoint.ckpt are written here
};

struct EvalPoint {
    int64_t step = 0;
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double wer_S = 0.0;
    double wer_G = 0.0;
};

struct RunRecord {
    std::string run_id;
    uint64_t seed = 0;
    std::vector<EvalPoint> points;
    std::filesystem::path checkpoint_path;

    const EvalPoint& final_point() const {
        if (points.empty()) throw Error("run record has no evaluation points");
        return points.back();
    }
};

// Corpus-level WER of greedy transcriptions over a dataset.
double evaluate_wer(Model<float>& model, const std::vector<Utterance>& data,
                    const NormalizerConfig& norm, int threads);

struct PretrainResult {
    Model<float> model;
    RunRecord record;
};

// Train from scratch on domain G (all layers trainable) until the dev WER
// target or the epoch cap. Logged wer_G is measured on the test subset.
PretrainResult pretrain(const TrainSpec& spec, const DomainData& G);

// Fine-tune on domain S following a mixed replay schedule, evaluating WER on
// the S test set and a fixed G evaluation subset every epoch.
RunRecord finetune(Model<float>& model, const TrainSpec& spec, const DomainData& S,
                   const std::vector<Utterance>& G_train, const std::vector<Utterance>& G_eval,
                   const MixedSchedule& schedule);

void write_run_csv(const RunRecord& record, const std::filesystem::path& path);
RunRecord read_run_csv(const std::filesystem::path& path);

}  // namespace rlab
