#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "rlab/rng.hpp"
#include "rlab/tensor.hpp"

namespace rlab {

// One synthetic utterance: a feature sequence with its reference transcript.
struct Utterance {
    std::string id;
    int speaker = 0;
    char domain = 'G';
    std::string transcript;
    Tensor<float> features;  // T x F
};

enum class Split { Train, Dev, Test };

const char* split_name(Split s);
Split parse_split(std::string_view name);

struct SplitSpec {
    double train = 0.8;
    double dev = 0.1;
    double test = 0.1;
    bool speaker_disjoint = false;

    void validate() const;
};

// Deterministic generator parameters for one domain. Domain G mimics general
// speech (word-sampled sentences, many speakers); domain S mimics a small
// command corpus (fixed sentence templates, few speakers, shifted acoustics).
struct DomainSpec {
    char tag = 'G';
    std::vector<std::string> words;      // sentence sampler source (tag G)
    std::vector<std::string> templates;  // fixed sentences (tag S)
    int speakers = 200;
    int utterances = 25000;  // word-sampler domains only; template domains emit speakers*templates
    int words_min = 2;
    int words_max = 4;
    double speaker_offset_scale = 0.25;
    double domain_shift = 0.0;   // magnitude of the fixed per-domain offset direction
    double domain_proto_scale = 0.0;  // per-domain component mixed into each character prototype
    int accent_groups = 1;            // speaker groups with their own prototype variants
    double accent_scale = 0.0;        // magnitude of the per-accent prototype component
    double deviation_prob = 0.0; // template domains: chance a speaker deviates from the script
    int frames_per_char_min = 1;
    int frames_per_char_max = 3;
    double noise_scale = 0.3;
    int feature_dim = 16;
    uint64_t seed = 1;
    uint64_t acoustic_seed = 7;  // character prototype table; shared across domains
    SplitSpec split;

    bool uses_templates() const { return !templates.empty(); }
    int total_utterances() const {
        return uses_templates() ? speakers * static_cast<int>(templates.size()) : utterances;
    }
    void validate() const;
};

// The 52 fixed command sentences and the general word list.
const std::vector<std::string>& german_word_list();
const std::vector<std::string>& command_templates();
const std::vector<std::string>& filler_words();

DomainSpec default_domain_G();
DomainSpec default_domain_S();

// With probability `prob`: duplicate one word, delete one word (suppressed
// for one-word templates), or insert a filler word. The returned transcript
// is what the utterance actually renders.
std::string apply_speaker_deviation(const std::string& tmpl, Rng& rng, double prob);

// Fully deterministic given (spec, which): regenerating any split yields
// bit-identical utterances.
std::vector<Utterance> generate_domain(const DomainSpec& spec, Split which);

struct DomainData {
    std::vector<Utterance> train, dev, test;
};

DomainData generate_all_splits(const DomainSpec& spec);

// --- manifest + raw feature file interchange ---------------------------
//
// manifest.jsonl: one JSON record per utterance (id, speaker, domain,
// transcript, feature file reference). Feature files: magic "RLAB",
// u32 version, u32 T, u32 F, then T*F little-endian float32.

void write_feature_file(const std::filesystem::path& path, const Tensor<float>& features);
Tensor<float> read_feature_file(const std::filesystem::path& path);

void export_dataset(const std::filesystem::path& dir, const std::vector<Utterance>& data);
std::vector<Utterance> import_dataset(const std::filesystem::path& manifest_path);

}  // namespace rlab
