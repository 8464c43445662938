#include "rlab/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "rlab/csv.hpp"
#include "rlab/decode.hpp"
#include "rlab/parallel.hpp"

namespace rlab {

double median(std::vector<double> values) {
    if (values.empty()) throw ArgumentError("median of empty set");
    std::sort(values.begin(), values.end());
    const size_t n = values.size();
    return (n % 2 == 1) ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

RunRecord run_pretrain(const ExperimentConfig& cfg, int workers) {
    const DomainData G = generate_all_splits(cfg.data_G);
    TrainSpec spec = cfg.train;
    spec.seed = cfg.seeds.front();
    spec.threads = workers;
    spec.run_id = std::string(arch_name(spec.model.arch)) + "_pretrain";
    spec.run_dir = cfg.pretrain_dir();
    PretrainResult result = pretrain(spec, G);
    return result.record;
}

namespace {

struct Cell {
    LayerChoice layer;
    double ratio;
    uint64_t seed;
};

}  // namespace

std::vector<RunRecord> run_finetune_grid(const ExperimentConfig& cfg,
                                         const std::filesystem::path& checkpoint,
                                         const CellFilter& filter, int workers) {
    if (!std::filesystem::exists(checkpoint))
        throw CheckpointError("checkpoint not found: " + checkpoint.string() +
                              " (run `replay-lab pretrain` first)");
    const LoadedCheckpoint base = load_checkpoint(checkpoint);

    std::vector<Cell> cells;
    for (const LayerChoice& layer : cfg.layer_configs) {
        if (filter.layer && (filter.layer->name != layer.name || filter.layer->scope != layer.scope))
            continue;
        for (double ratio : cfg.replay_ratios) {
            if (filter.ratio && *filter.ratio != ratio) continue;
            for (uint64_t seed : cfg.seeds) {
                if (filter.seed && *filter.seed != seed) continue;
                cells.push_back(Cell{layer, ratio, seed});
            }
        }
    }
    if (filter.layer && cells.empty()) {
        // a single requested cell must exist even when absent from the grid lists
        cells.push_back(Cell{*filter.layer, filter.ratio.value_or(0.0),
                             filter.seed.value_or(cfg.seeds.front())});
    }
    if (cells.empty()) throw ConfigError("fine-tuning grid is empty");

    const DomainData S = generate_all_splits(cfg.data_S);
    const std::vector<Utterance> G_train = generate_domain(cfg.data_G, Split::Train);
    const std::vector<Utterance> G_test = generate_domain(cfg.data_G, Split::Test);

    const int grid_workers = static_cast<int>(std::min<int64_t>(workers, cells.size()));
    const int cell_threads = std::max(1, workers / std::max(1, grid_workers));

    std::vector<RunRecord> records(cells.size());
    parallel_for(static_cast<int64_t>(cells.size()), grid_workers, [&](int64_t i) {
        const Cell& cell = cells[static_cast<size_t>(i)];
        TrainSpec spec = cfg.train;
        spec.seed = cell.seed;
        spec.threads = cell_threads;
        spec.layers = preset(cell.layer.name, spec.model.encoder_layers,
                             spec.model.decoder_layers, cell.layer.scope);
        spec.replay = ReplayPolicy{cell.ratio, cell.seed, false, false};
        spec.run_id = run_id_for(spec.model.arch, cell.layer, cell.ratio, cell.seed);
        spec.run_dir = cfg.experiment_dir() / spec.run_id;

        const MixedSchedule schedule =
            build_schedule(static_cast<int64_t>(S.train.size()),
                           static_cast<int64_t>(G_train.size()), spec.replay, spec.batch_size,
                           spec.epochs);
        Model<float> model = base.model;  // fresh copy of the pretrained weights
        RunRecord record = finetune(model, spec, S, G_train, G_test, schedule);
        std::filesystem::create_directories(spec.run_dir);
        std::ofstream prov(spec.run_dir / "provenance.csv", std::ios::binary);
        dump_provenance_csv(schedule, prov);
        records[static_cast<size_t>(i)] = std::move(record);
    });
    return records;
}

std::vector<Utterance> resolve_dataset(const ExperimentConfig& cfg, const std::string& spec) {
    const size_t dot = spec.find('.');
    if (dot != std::string::npos) {
        const std::string domain = spec.substr(0, dot);
        if (domain == "G" || domain == "S") {
            const Split split = parse_split(spec.substr(dot + 1));
            return generate_domain(domain == "G" ? cfg.data_G : cfg.data_S, split);
        }
    }
    if (std::filesystem::exists(spec)) return import_dataset(spec);
    throw ConfigError("unknown dataset '" + spec +
                      "' (expected G.train|G.dev|G.test|S.train|S.dev|S.test or a manifest path)");
}

void evaluate_to_csv(const std::filesystem::path& checkpoint, const std::vector<Utterance>& data,
                     const NormalizerConfig& norm, int workers, std::ostream& os) {
    if (!std::filesystem::exists(checkpoint))
        throw CheckpointError("checkpoint not found: " + checkpoint.string());
    LoadedCheckpoint loaded = load_checkpoint(checkpoint);
    std::vector<std::string> hyps(data.size());
    parallel_for(static_cast<int64_t>(data.size()), workers, [&](int64_t i) {
        hyps[static_cast<size_t>(i)] =
            transcribe(loaded.model, data[static_cast<size_t>(i)].features);
    });
    os << "id,ref_words,hits,substitutions,insertions,deletions,wer\n";
    WerBreakdown total;
    for (size_t i = 0; i < data.size(); ++i) {
        const WerBreakdown b = wer(data[i].transcript, hyps[i], norm);
        total.ref_words += b.ref_words;
        total.hits += b.hits;
        total.substitutions += b.substitutions;
        total.insertions += b.insertions;
        total.deletions += b.deletions;
        os << data[i].id << ',' << b.ref_words << ',' << b.hits << ',' << b.substitutions << ','
           << b.insertions << ',' << b.deletions << ',' << format_double(b.wer) << '\n';
    }
    total.wer = total.ref_words == 0
                    ? 0.0
                    : static_cast<double>(total.edits()) / static_cast<double>(total.ref_words);
    os << "TOTAL," << total.ref_words << ',' << total.hits << ',' << total.substitutions << ','
       << total.insertions << ',' << total.deletions << ',' << format_double(total.wer) << '\n';
}

std::vector<SummaryRow> run_report(const std::filesystem::path& dir,
                                   const std::filesystem::path& out_dir) {
    if (!std::filesystem::is_directory(dir))
        throw ConfigError("report directory does not exist: " + dir.string());
    std::vector<std::filesystem::path> curves;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().filename() == "curve.csv")
            curves.push_back(entry.path());
    }
    std::sort(curves.begin(), curves.end());

    std::filesystem::create_directories(out_dir / "curves");
    // group key: (model, layer_config, er_pct)
    std::map<std::tuple<std::string, std::string, double>, std::pair<std::vector<double>, std::vector<double>>>
        groups;
    for (const std::filesystem::path& path : curves) {
        const RunRecord record = read_run_csv(path);
        std::filesystem::copy_file(path, out_dir / "curves" / (record.run_id + ".csv"),
                                   std::filesystem::copy_options::overwrite_existing);
        RunIdParts parts;
        if (!parse_run_id(record.run_id, parts)) continue;  // pretrain runs and strangers
        auto& [wer_s, wer_g] = groups[{parts.model, parts.layer_config, parts.er_pct}];
        wer_s.push_back(record.final_point().wer_S);
        wer_g.push_back(record.final_point().wer_G);
    }

    std::vector<SummaryRow> rows;
    std::ofstream os(out_dir / "summary.csv", std::ios::binary);
    if (!os) throw IoError("cannot write summary.csv in " + out_dir.string());
    os << "model,layer_config,er_pct,wer_S,wer_G\n";
    for (const auto& [key, values] : groups) {
        SummaryRow row;
        row.model = std::get<0>(key);
        row.layer_config = std::get<1>(key);
        row.er_pct = std::get<2>(key);
        row.wer_S = median(values.first);
        row.wer_G = median(values.second);
        row.runs = static_cast<int>(values.first.size());
        os << row.model << ',' << row.layer_config << ',' << format_double(row.er_pct) << ','
           << format_double(row.wer_S) << ',' << format_double(row.wer_G) << '\n';
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace rlab
