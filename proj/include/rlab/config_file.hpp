#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "rlab/data.hpp"
#include "rlab/freeze.hpp"
#include "rlab/trainer.hpp"

namespace rlab {

// Layer preset plus (for encoder-decoder models) the component scope.
struct LayerChoice {
    std::string name = "all";
    PresetScope scope = PresetScope::Both;

    // Filesystem-safe label: "last6", "last6-enc", "last6-dec".
    std::string label() const;
    // Accepts "name" or "name:scope" with scope both|encoder-only|decoder-only
    // (enc/dec shorthands allowed).
    static LayerChoice parse(std::string_view text);
};

// One experiment: data specs for both domains, the model, training
// hyperparameters, and the (layer config x replay ratio x seed) grid.
struct ExperimentConfig {
    std::string id = "desk";
    std::filesystem::path output_dir = "runs";
    TrainSpec train;  // model + hyperparameters; per-cell fields filled by the runner
    DomainSpec data_G = default_domain_G();
    DomainSpec data_S = default_domain_S();
    std::vector<LayerChoice> layer_configs;
    std::vector<double> replay_ratios;
    std::vector<uint64_t> seeds;

    static ExperimentConfig defaults(Arch arch);
    static ExperimentConfig from_file(const std::filesystem::path& path);
    void validate() const;

    std::filesystem::path experiment_dir() const { return output_dir / id; }
    std::filesystem::path pretrain_dir() const { return experiment_dir() / "pretrain"; }
};

// Serialize the config in the file format (documents the schema; the output
// parses back to an equivalent config).
std::string to_config_text(const ExperimentConfig& cfg);

std::string run_id_for(Arch arch, const LayerChoice& choice, double ratio, uint64_t seed);

struct RunIdParts {
    std::string model;
    std::string layer_config;
    double er_pct = 0.0;
    uint64_t seed = 0;
};

// Inverse of run_id_for; returns false for non-grid run ids (e.g. pretrain).
bool parse_run_id(const std::string& run_id, RunIdParts& parts);

}  // namespace rlab
