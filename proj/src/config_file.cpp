#include "rlab/config_file.hpp"

#include <algorithm>
#include <cctype>
#include <cstring>
#include <fstream>
#include <set>
#include <sstream>

#include "rlab/csv.hpp"
#include "rlab/text.hpp"

namespace rlab {

std::string LayerChoice::label() const {
    switch (scope) {
        case PresetScope::EncoderOnly: return name + "-enc";
        case PresetScope::DecoderOnly: return name + "-dec";
        default: return name;
    }
}

LayerChoice LayerChoice::parse(std::string_view text) {
    LayerChoice c;
    const size_t colon = text.find(':');
    if (colon == std::string_view::npos) {
        c.name = std::string(text);
    } else {
        c.name = std::string(text.substr(0, colon));
        c.scope = parse_scope(text.substr(colon + 1));
    }
    if (c.name.empty()) throw ConfigError("empty layer config name");
    return c;
}

namespace {

std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

// Parsed key=value entries grouped by [section], with line numbers for
// diagnostics and strict unknown-key rejection.
class ConfigReader {
  public:
    explicit ConfigReader(const std::filesystem::path& path) : path_(path.string()) {
        std::ifstream is(path);
        if (!is) throw ConfigError("cannot open config file " + path_);
        std::string line;
        std::string section;
        int line_no = 0;
        while (std::getline(is, line)) {
            ++line_no;
            const size_t hash = line.find('#');
            if (hash != std::string::npos) line.erase(hash);
            const std::string text = trim(line);
            if (text.empty()) continue;
            if (text.front() == '[') {
                if (text.back() != ']')
                    throw ConfigError(path_ + ":" + std::to_string(line_no) +
                                      ": malformed section header '" + text + "'");
                section = trim(text.substr(1, text.size() - 2));
                sections_seen_.insert(section);
                continue;
            }
            const size_t eq = text.find('=');
            if (eq == std::string::npos)
                throw ConfigError(path_ + ":" + std::to_string(line_no) +
                                  ": expected key = value, got '" + text + "'");
            const std::string key = trim(text.substr(0, eq));
            const std::string value = trim(text.substr(eq + 1));
            if (key.empty())
                throw ConfigError(path_ + ":" + std::to_string(line_no) + ": empty key");
            auto [it, inserted] =
                entries_.emplace(section + "/" + key, Entry{value, line_no, false});
            if (!inserted)
                throw ConfigError(path_ + ":" + std::to_string(line_no) + ": duplicate key '" +
                                  key + "' in [" + section + "]");
        }
    }

    bool has(const std::string& section, const std::string& key) const {
        return entries_.count(section + "/" + key) > 0;
    }

    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) {
        auto it = entries_.find(section + "/" + key);
        if (it == entries_.end()) return fallback;
        it->second.used = true;
        return it->second.value;
    }

    int64_t get_int(const std::string& section, const std::string& key, int64_t fallback) {
        auto it = entries_.find(section + "/" + key);
        if (it == entries_.end()) return fallback;
        it->second.used = true;
        try {
            size_t pos = 0;
            const int64_t v = std::stoll(it->second.value, &pos);
            if (pos != it->second.value.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw ConfigError(path_ + ":" + std::to_string(it->second.line) + ": field '" + key +
                              "' expects an integer, got '" + it->second.value + "'");
        }
    }

    double get_double(const std::string& section, const std::string& key, double fallback) {
        auto it = entries_.find(section + "/" + key);
        if (it == entries_.end()) return fallback;
        it->second.used = true;
        try {
            size_t pos = 0;
            const double v = std::stod(it->second.value, &pos);
            if (pos != it->second.value.size()) throw std::invalid_argument("");
            return v;
        } catch (...) {
            throw ConfigError(path_ + ":" + std::to_string(it->second.line) + ": field '" + key +
                              "' expects a number, got '" + it->second.value + "'");
        }
    }

    bool get_bool(const std::string& section, const std::string& key, bool fallback) {
        auto it = entries_.find(section + "/" + key);
        if (it == entries_.end()) return fallback;
        it->second.used = true;
        if (it->second.value == "true") return true;
        if (it->second.value == "false") return false;
        throw ConfigError(path_ + ":" + std::to_string(it->second.line) + ": field '" + key +
                          "' expects true or false");
    }

    std::vector<std::string> get_list(const std::string& section, const std::string& key) {
        auto it = entries_.find(section + "/" + key);
        if (it == entries_.end()) return {};
        it->second.used = true;
        std::vector<std::string> items;
        std::stringstream ss(it->second.value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            const std::string t = trim(item);
            if (!t.empty()) items.push_back(t);
        }
        return items;
    }

    int line_of(const std::string& section, const std::string& key) const {
        auto it = entries_.find(section + "/" + key);
        return it == entries_.end() ? 0 : it->second.line;
    }

    // Strict schema: every provided key must have been consumed.
    void finish() const {
        for (const auto& [path_key, entry] : entries_) {
            if (entry.used) continue;
            const size_t slash = path_key.find('/');
            throw ConfigError(path_ + ":" + std::to_string(entry.line) + ": unknown field '" +
                              path_key.substr(slash + 1) + "' in [" + path_key.substr(0, slash) +
                              "]");
        }
    }

    const std::string& path() const { return path_; }

  private:
    struct Entry {
        std::string value;
        int line;
        bool used;
    };

    std::string path_;
    std::map<std::string, Entry> entries_;
    std::set<std::string> sections_seen_;
};

void read_domain(ConfigReader& r, const std::string& section, DomainSpec& d) {
    d.seed = static_cast<uint64_t>(r.get_int(section, "seed", static_cast<int64_t>(d.seed)));
    d.acoustic_seed = static_cast<uint64_t>(
        r.get_int(section, "acoustic_seed", static_cast<int64_t>(d.acoustic_seed)));
    d.speakers = static_cast<int>(r.get_int(section, "speakers", d.speakers));
    if (!d.uses_templates()) {
        d.utterances = static_cast<int>(r.get_int(section, "utterances", d.utterances));
        d.words_min = static_cast<int>(r.get_int(section, "words_min", d.words_min));
        d.words_max = static_cast<int>(r.get_int(section, "words_max", d.words_max));
    }
    d.noise_scale = r.get_double(section, "noise_scale", d.noise_scale);
    d.speaker_offset_scale =
        r.get_double(section, "speaker_offset_scale", d.speaker_offset_scale);
    d.domain_shift = r.get_double(section, "domain_shift", d.domain_shift);
    d.domain_proto_scale = r.get_double(section, "domain_proto_scale", d.domain_proto_scale);
    d.accent_groups = static_cast<int>(r.get_int(section, "accent_groups", d.accent_groups));
    d.accent_scale = r.get_double(section, "accent_scale", d.accent_scale);
    d.deviation_prob = r.get_double(section, "deviation_prob", d.deviation_prob);
    d.frames_per_char_min =
        static_cast<int>(r.get_int(section, "frames_per_char_min", d.frames_per_char_min));
    d.frames_per_char_max =
        static_cast<int>(r.get_int(section, "frames_per_char_max", d.frames_per_char_max));
}

bool filesystem_safe(const std::string& s) {
    if (s.empty()) return false;
    for (char c : s)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '_' && c != '-') return false;
    return true;
}

}  // namespace

ExperimentConfig ExperimentConfig::defaults(Arch arch) {
    ExperimentConfig cfg;
    cfg.train.model.arch = arch;
    if (arch == Arch::EncCtc) {
        cfg.train.model.encoder_layers = 8;
        cfg.train.model.decoder_layers = 0;
        cfg.train.model.vocab = Vocab::ctc(kGermanChars);
        cfg.train.peak_lr = 1e-3;
        cfg.train.pretrain_peak_lr = 2e-3;
    } else {
        cfg.train.model.encoder_layers = 4;
        cfg.train.model.decoder_layers = 4;
        cfg.train.model.vocab = Vocab::enc_dec(kGermanChars);
        cfg.train.peak_lr = 1e-3;
        cfg.train.pretrain_peak_lr = 2e-3;
        cfg.train.pretrain_max_epochs = 6;
    }
    cfg.layer_configs = {LayerChoice{"all", PresetScope::Both}};
    cfg.replay_ratios = {0.0};
    cfg.seeds = {1};
    return cfg;
}

ExperimentConfig ExperimentConfig::from_file(const std::filesystem::path& path) {
    ConfigReader r(path);
    const int64_t schema = r.get_int("", "schema_version", -1);
    if (schema != 1)
        throw ConfigError(r.path() + ": schema_version = 1 is required at the top of the file");

    const std::string arch_text = r.get_string("model", "arch", "enc_ctc");
    Arch arch;
    if (arch_text == "enc_ctc")
        arch = Arch::EncCtc;
    else if (arch_text == "enc_dec")
        arch = Arch::EncDec;
    else
        throw ConfigError(r.path() + ":" + std::to_string(r.line_of("model", "arch")) +
                          ": field 'arch' must be enc_ctc or enc_dec, got '" + arch_text + "'");

    ExperimentConfig cfg = defaults(arch);
    cfg.id = r.get_string("experiment", "id", cfg.id);
    cfg.output_dir = r.get_string("experiment", "output_dir", cfg.output_dir.string());

    ModelConfig& m = cfg.train.model;
    m.encoder_layers = static_cast<int>(r.get_int("model", "encoder_layers", m.encoder_layers));
    m.decoder_layers = static_cast<int>(r.get_int("model", "decoder_layers", m.decoder_layers));
    m.model_dim = static_cast<int>(r.get_int("model", "model_dim", m.model_dim));
    m.heads = static_cast<int>(r.get_int("model", "heads", m.heads));
    m.ff_dim = static_cast<int>(r.get_int("model", "ff_dim", m.ff_dim));
    m.feature_dim = static_cast<int>(r.get_int("model", "feature_dim", m.feature_dim));
    m.dropout_p = static_cast<float>(r.get_double("model", "dropout", m.dropout_p));
    m.max_target_len = static_cast<int>(r.get_int("model", "max_target_len", m.max_target_len));

    read_domain(r, "data.G", cfg.data_G);
    read_domain(r, "data.S", cfg.data_S);
    cfg.data_G.feature_dim = cfg.data_S.feature_dim = m.feature_dim;

    TrainSpec& t = cfg.train;
    t.epochs = static_cast<int>(r.get_int("train", "epochs", t.epochs));
    t.batch_size = static_cast<int>(r.get_int("train", "batch_size", t.batch_size));
    t.peak_lr = r.get_double("train", "peak_lr", t.peak_lr);
    t.pretrain_peak_lr = r.get_double("train", "pretrain_peak_lr", t.pretrain_peak_lr);
    t.warmup_steps = r.get_int("train", "warmup_steps", t.warmup_steps);
    t.opt.weight_decay = r.get_double("train", "weight_decay", t.opt.weight_decay);
    t.opt.clip_norm = r.get_double("train", "clip_norm", t.opt.clip_norm);
    t.label_smoothing = r.get_double("train", "label_smoothing", t.label_smoothing);
    t.eval_G_subset = static_cast<int>(r.get_int("train", "eval_g_subset", t.eval_G_subset));
    t.pretrain_target_wer = r.get_double("train", "pretrain_target_wer", t.pretrain_target_wer);
    t.pretrain_max_epochs =
        static_cast<int>(r.get_int("train", "pretrain_max_epochs", t.pretrain_max_epochs));
    t.freeze_input_projection =
        r.get_bool("train", "freeze_input_projection", t.freeze_input_projection);
    t.divergence_factor = r.get_double("train", "divergence_factor", t.divergence_factor);
    t.divergence_patience =
        static_cast<int>(r.get_int("train", "divergence_patience", t.divergence_patience));

    cfg.layer_configs.clear();
    for (const std::string& item : r.get_list("grid", "layer_configs"))
        cfg.layer_configs.push_back(LayerChoice::parse(item));
    if (cfg.layer_configs.empty()) cfg.layer_configs = {LayerChoice{"all", PresetScope::Both}};

    if (r.has("grid", "replay_ratios")) {
        cfg.replay_ratios.clear();
        for (const std::string& item : r.get_list("grid", "replay_ratios"))
            cfg.replay_ratios.push_back(parse_double(item));
    }
    if (r.has("grid", "seeds")) {
        cfg.seeds.clear();
        for (const std::string& item : r.get_list("grid", "seeds"))
            cfg.seeds.push_back(static_cast<uint64_t>(std::stoull(item)));
    }

    r.finish();
    cfg.validate();
    return cfg;
}

void ExperimentConfig::validate() const {
    if (!filesystem_safe(id))
        throw ConfigError("experiment id '" + id + "' is not filesystem-safe");
    if (layer_configs.empty()) throw ConfigError("grid has no layer configs");
    if (replay_ratios.empty()) throw ConfigError("grid has no replay ratios");
    if (seeds.empty()) throw ConfigError("grid has no seeds");
    for (double r : replay_ratios)
        if (r < 0 || r >= 1) throw ConfigError("replay ratio " + format_double(r) + " not in [0, 1)");
    train.model.validate();
    data_G.validate();
    data_S.validate();
    // fail early on unknown preset names
    for (const LayerChoice& c : layer_configs)
        preset(c.name, train.model.encoder_layers, train.model.decoder_layers, c.scope);
}

std::string to_config_text(const ExperimentConfig& cfg) {
    std::ostringstream os;
    os << "schema_version = 1\n\n";
    os << "[experiment]\n";
    os << "id = " << cfg.id << "\n";
    os << "output_dir = " << cfg.output_dir.string() << "\n\n";
    const ModelConfig& m = cfg.train.model;
    os << "[model]\n";
    os << "arch = " << arch_name(m.arch) << "\n";
    os << "encoder_layers = " << m.encoder_layers << "\n";
    os << "decoder_layers = " << m.decoder_layers << "\n";
    os << "model_dim = " << m.model_dim << "\n";
    os << "heads = " << m.heads << "\n";
    os << "ff_dim = " << m.ff_dim << "\n";
    os << "feature_dim = " << m.feature_dim << "\n";
    os << "dropout = " << format_double(m.dropout_p) << "\n";
    os << "max_target_len = " << m.max_target_len << "\n\n";
    auto domain = [&os](const char* section, const DomainSpec& d) {
        os << "[" << section << "]\n";
        os << "seed = " << d.seed << "\n";
        os << "acoustic_seed = " << d.acoustic_seed << "\n";
        os << "speakers = " << d.speakers << "\n";
        if (!d.uses_templates()) {
            os << "utterances = " << d.utterances << "\n";
            os << "words_min = " << d.words_min << "\n";
            os << "words_max = " << d.words_max << "\n";
        }
        os << "noise_scale = " << format_double(d.noise_scale) << "\n";
        os << "speaker_offset_scale = " << format_double(d.speaker_offset_scale) << "\n";
        os << "domain_shift = " << format_double(d.domain_shift) << "\n";
        os << "domain_proto_scale = " << format_double(d.domain_proto_scale) << "\n";
        os << "accent_groups = " << d.accent_groups << "\n";
        os << "accent_scale = " << format_double(d.accent_scale) << "\n";
        if (d.uses_templates()) os << "deviation_prob = " << format_double(d.deviation_prob) << "\n";
        os << "\n";
    };
    domain("data.G", cfg.data_G);
    domain("data.S", cfg.data_S);
    const TrainSpec& t = cfg.train;
    os << "[train]\n";
    os << "epochs = " << t.epochs << "\n";
    os << "batch_size = " << t.batch_size << "\n";
    os << "peak_lr = " << format_double(t.peak_lr) << "\n";
    os << "pretrain_peak_lr = " << format_double(t.pretrain_peak_lr) << "\n";
    os << "warmup_steps = " << t.warmup_steps << "\n";
    os << "weight_decay = " << format_double(t.opt.weight_decay) << "\n";
    os << "clip_norm = " << format_double(t.opt.clip_norm) << "\n";
    os << "label_smoothing = " << format_double(t.label_smoothing) << "\n";
    os << "eval_g_subset = " << t.eval_G_subset << "\n";
    os << "pretrain_target_wer = " << format_double(t.pretrain_target_wer) << "\n";
    os << "pretrain_max_epochs = " << t.pretrain_max_epochs << "\n";
    os << "freeze_input_projection = " << (t.freeze_input_projection ? "true" : "false") << "\n";
    os << "divergence_factor = " << format_double(t.divergence_factor) << "\n";
    os << "divergence_patience = " << t.divergence_patience << "\n\n";
    os << "[grid]\n";
    os << "layer_configs = ";
    for (size_t i = 0; i < cfg.layer_configs.size(); ++i) {
        const LayerChoice& c = cfg.layer_configs[i];
        os << (i ? ", " : "") << c.name;
        if (c.scope != PresetScope::Both)
            os << ":" << (c.scope == PresetScope::EncoderOnly ? "encoder-only" : "decoder-only");
    }
    os << "\n";
    os << "replay_ratios = ";
    for (size_t i = 0; i < cfg.replay_ratios.size(); ++i)
        os << (i ? ", " : "") << format_double(cfg.replay_ratios[i]);
    os << "\n";
    os << "seeds = ";
    for (size_t i = 0; i < cfg.seeds.size(); ++i) os << (i ? ", " : "") << cfg.seeds[i];
    os << "\n";
    return os.str();
}

std::string run_id_for(Arch arch, const LayerChoice& choice, double ratio, uint64_t seed) {
    const double pct = ratio * 100.0;
    std::string pct_text = format_double(pct);
    if (pct == std::floor(pct)) pct_text = std::to_string(static_cast<int64_t>(pct));
    return std::string(arch_name(arch)) + "_" + choice.label() + "_er" + pct_text + "_seed" +
           std::to_string(seed);
}

bool parse_run_id(const std::string& run_id, RunIdParts& parts) {
    std::string rest = run_id;
    for (const char* prefix : {"enc_ctc_", "enc_dec_"}) {
        if (rest.rfind(prefix, 0) == 0) {
            parts.model = std::string(prefix, strlen(prefix) - 1);
            rest = rest.substr(strlen(prefix));
            const size_t seed_pos = rest.rfind("_seed");
            if (seed_pos == std::string::npos) return false;
            const size_t er_pos = rest.rfind("_er", seed_pos - 1);
            if (er_pos == std::string::npos || er_pos + 3 >= seed_pos) return false;
            try {
                parts.seed = std::stoull(rest.substr(seed_pos + 5));
                parts.er_pct = parse_double(rest.substr(er_pos + 3, seed_pos - er_pos - 3));
            } catch (...) {
                return false;
            }
            parts.layer_config = rest.substr(0, er_pos);
            return !parts.layer_config.empty();
        }
    }
    return false;
}

}  // namespace rlab
