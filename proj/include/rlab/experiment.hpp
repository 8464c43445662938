#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rlab/config_file.hpp"
#include "rlab/trainer.hpp"

namespace rlab {

// Pretrains on domain G and writes pretrain/{curve.csv,checkpoint.ckpt}
// under the experiment directory. Returns the run record.
RunRecord run_pretrain(const ExperimentConfig& cfg, int workers);

// Optional single-cell selection for `finetune`; unset fields run the whole
// grid axis from the config.
struct CellFilter {
    std::optional<LayerChoice> layer;
    std::optional<double> ratio;
    std::optional<uint64_t> seed;
};

// Runs the (layer config x replay ratio x seed) grid of fine-tuning cells
// from a pretrained checkpoint. Cells execute concurrently up to `workers`;
// each cell owns its output directory. Returns the per-cell records.
std::vector<RunRecord> run_finetune_grid(const ExperimentConfig& cfg,
                                         const std::filesystem::path& checkpoint,
                                         const CellFilter& filter, int workers);

// Scores a checkpoint on a dataset and streams a per-utterance CSV plus a
// trailing TOTAL row.
void evaluate_to_csv(const std::filesystem::path& checkpoint, const std::vector<Utterance>& data,
                     const NormalizerConfig& norm, int workers, std::ostream& os);

// Resolves "G.train" / "S.test" / ... against the config's generators, or a
// manifest path against the filesystem.
std::vector<Utterance> resolve_dataset(const ExperimentConfig& cfg, const std::string& spec);

struct SummaryRow {
    std::string model;
    std::string layer_config;
    double er_pct = 0.0;
    double wer_S = 0.0;  // median over seeds, final epoch
    double wer_G = 0.0;
    int runs = 0;
};

// Aggregates every curve.csv under `dir` (recursively): copies each run's
// curve into out_dir/curves/<run_id>.csv and writes out_dir/summary.csv with
// per-(model, layer config, ER) medians over seeds. Reads only RunRecord
// CSVs, never checkpoints.
std::vector<SummaryRow> run_report(const std::filesystem::path& dir,
                                   const std::filesystem::path& out_dir);

double median(std::vector<double> values);

}  // namespace rlab
