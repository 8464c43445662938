#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "rlab/csv.hpp"
#include "rlab/experiment.hpp"
#include "rlab/parallel.hpp"

namespace {

rlab::ExperimentConfig load_config(const std::string& path) {
    return rlab::ExperimentConfig::from_file(path);
}

int dispatch(const std::function<int()>& body) {
    try {
        return body();
    } catch (const rlab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const rlab::CheckpointError& e) {
        std::cerr << "checkpoint error: " << e.what() << "\n";
        return 3;
    } catch (const rlab::DivergenceError& e) {
        std::cerr << "training diverged: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"replay-lab: layer-selective fine-tuning with experience replay on two synthetic"
                 " speech-command domains"};
    app.require_subcommand(1);

    int workers_flag = 0;  // 0 = auto; RLAB_WORKERS overrides
    app.add_option("--workers", workers_flag, "worker threads (env RLAB_WORKERS overrides)");

    std::string config_path;
    std::string layer_config;
    std::string scope = "both";
    std::optional<double> er;
    std::optional<uint64_t> seed;
    std::string ckpt;
    std::string data_spec;
    std::string out_path;
    std::string report_dir;
    std::string domain = "S";
    std::string split = "train";
    std::string arch = "enc_ctc";

    CLI::App* cmd_pretrain = app.add_subcommand("pretrain", "train the domain-G base model");
    cmd_pretrain->add_option("-c,--config", config_path, "experiment config file")->required();

    CLI::App* cmd_finetune = app.add_subcommand(
        "finetune", "fine-tune on domain S; runs the whole config grid unless a cell is selected");
    cmd_finetune->add_option("-c,--config", config_path, "experiment config file")->required();
    cmd_finetune->add_option("--layer-config", layer_config,
                             "layer preset (all, first12, last12, f4-i4-l4, f2-i2-l2, last6; "
                             "enc-dec models: all, first6, last6, f1-i2-l1, f2-i2-l2, last3)");
    cmd_finetune->add_option("--scope", scope, "preset scope: both|encoder-only|decoder-only");
    double er_flag = -1.0;
    cmd_finetune->add_option("--er", er_flag, "experience replay ratio (e.g. 0.1)");
    int64_t seed_flag = -1;
    cmd_finetune->add_option("--seed", seed_flag, "run a single seed");
    cmd_finetune->add_option("--ckpt", ckpt, "pretrained checkpoint (default: <out>/pretrain)");

    CLI::App* cmd_evaluate = app.add_subcommand("evaluate", "score a checkpoint on a dataset");
    cmd_evaluate->add_option("--ckpt", ckpt, "checkpoint path")->required();
    cmd_evaluate->add_option("--data", data_spec, "G.train|G.dev|G.test|S.*|manifest path")
        ->required();
    cmd_evaluate->add_option("-c,--config", config_path, "config for generated datasets");
    cmd_evaluate->add_option("-o,--out", out_path, "write CSV here instead of stdout");

    CLI::App* cmd_report = app.add_subcommand("report", "aggregate run CSVs into curves + summary");
    cmd_report->add_option("-d,--dir", report_dir, "directory containing runs")->required();
    cmd_report->add_option("-o,--out", out_path, "output directory (default: <dir>/report)");

    CLI::App* cmd_export = app.add_subcommand("export-data", "write a split as manifest + features");
    cmd_export->add_option("-c,--config", config_path, "experiment config file")->required();
    cmd_export->add_option("--domain", domain, "G or S");
    cmd_export->add_option("--split", split, "train|dev|test");
    cmd_export->add_option("-o,--out", out_path, "output directory")->required();

    CLI::App* cmd_default = app.add_subcommand("default-config", "print a config file template");
    cmd_default->add_option("--arch", arch, "enc_ctc or enc_dec");

    CLI11_PARSE(app, argc, argv);
    const int workers = rlab::env_workers(workers_flag);

    if (cmd_pretrain->parsed()) {
        return dispatch([&] {
            const rlab::ExperimentConfig cfg = load_config(config_path);
            const rlab::RunRecord record = rlab::run_pretrain(cfg, workers);
            const auto& final = record.final_point();
            std::cout << "pretrained " << record.run_id << ": wer_G="
                      << rlab::format_double(final.wer_G) << " after epoch " << final.epoch
                      << "\ncheckpoint: " << record.checkpoint_path.string() << "\n";
            return 0;
        });
    }

    if (cmd_finetune->parsed()) {
        return dispatch([&] {
            const rlab::ExperimentConfig cfg = load_config(config_path);
            rlab::CellFilter filter;
            if (!layer_config.empty()) {
                rlab::LayerChoice choice = rlab::LayerChoice::parse(layer_config);
                if (cmd_finetune->count("--scope")) choice.scope = rlab::parse_scope(scope);
                filter.layer = choice;
            }
            if (er_flag >= 0) filter.ratio = er_flag;
            if (seed_flag >= 0) filter.seed = static_cast<uint64_t>(seed_flag);
            const std::filesystem::path checkpoint =
                ckpt.empty() ? cfg.pretrain_dir() / "checkpoint.ckpt" : std::filesystem::path(ckpt);
            const auto records = rlab::run_finetune_grid(cfg, checkpoint, filter, workers);
            for (const rlab::RunRecord& r : records) {
                const auto& final = r.final_point();
                std::cout << r.run_id << ": wer_S=" << rlab::format_double(final.wer_S)
                          << " wer_G=" << rlab::format_double(final.wer_G) << "\n";
            }
            return 0;
        });
    }

    if (cmd_evaluate->parsed()) {
        return dispatch([&] {
            const rlab::ExperimentConfig cfg =
                config_path.empty() ? rlab::ExperimentConfig::defaults(rlab::Arch::EncCtc)
                                    : load_config(config_path);
            const std::vector<rlab::Utterance> data = rlab::resolve_dataset(cfg, data_spec);
            if (out_path.empty()) {
                rlab::evaluate_to_csv(ckpt, data, cfg.train.norm, workers, std::cout);
            } else {
                std::ofstream os(out_path, std::ios::binary);
                if (!os) throw rlab::IoError("cannot write " + out_path);
                rlab::evaluate_to_csv(ckpt, data, cfg.train.norm, workers, os);
            }
            return 0;
        });
    }

    if (cmd_report->parsed()) {
        return dispatch([&] {
            const std::filesystem::path dir(report_dir);
            const std::filesystem::path out = out_path.empty() ? dir / "report" : std::filesystem::path(out_path);
            const auto rows = rlab::run_report(dir, out);
            std::cout << "model,layer_config,er_pct,wer_S,wer_G,runs\n";
            for (const rlab::SummaryRow& r : rows)
                std::cout << r.model << ',' << r.layer_config << ','
                          << rlab::format_double(r.er_pct) << ',' << rlab::format_double(r.wer_S)
                          << ',' << rlab::format_double(r.wer_G) << ',' << r.runs << "\n";
            std::cout << "written: " << (out / "summary.csv").string() << "\n";
            return 0;
        });
    }

    if (cmd_export->parsed()) {
        return dispatch([&] {
            const rlab::ExperimentConfig cfg = load_config(config_path);
            if (domain != "G" && domain != "S")
                throw rlab::ConfigError("--domain must be G or S, got '" + domain + "'");
            const auto data = rlab::generate_domain(domain == "G" ? cfg.data_G : cfg.data_S,
                                                    rlab::parse_split(split));
            rlab::export_dataset(out_path, data);
            std::cout << "exported " << data.size() << " utterances to " << out_path << "\n";
            return 0;
        });
    }

    if (cmd_default->parsed()) {
        return dispatch([&] {
            if (arch != "enc_ctc" && arch != "enc_dec")
                throw rlab::ConfigError("--arch must be enc_ctc or enc_dec");
            std::cout << rlab::to_config_text(rlab::ExperimentConfig::defaults(
                arch == "enc_ctc" ? rlab::Arch::EncCtc : rlab::Arch::EncDec));
            return 0;
        });
    }

    return 1;
}
