#include "rlab/data.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "rlab/error.hpp"
#include "rlab/text.hpp"
#include "rlab/wer.hpp"

static_assert(std::endian::native == std::endian::little,
              "feature/checkpoint files are little-endian; big-endian hosts need byte swaps");

namespace rlab {

const char* split_name(Split s) {
    switch (s) {
        case Split::Train: return "train";
        case Split::Dev: return "dev";
        default: return "test";
    }
}

Split parse_split(std::string_view name) {
    if (name == "train") return Split::Train;
    if (name == "dev") return Split::Dev;
    if (name == "test") return Split::Test;
    throw ConfigError("unknown split '" + std::string(name) + "' (valid: train, dev, test)");
}

void SplitSpec::validate() const {
    if (train < 0 || dev < 0 || test < 0) throw ConfigError("split fractions must be non-negative");
    if (std::abs(train + dev + test - 1.0) > 1e-9)
        throw ConfigError("split fractions must sum to 1");
}

void DomainSpec::validate() const {
    split.validate();
    if (words.empty() && templates.empty())
        throw ConfigError("domain needs a word list or sentence templates");
    if (speakers < 1) throw ConfigError("domain needs at least one speaker");
    if (!uses_templates() && utterances < 1) throw ConfigError("domain needs utterances");
    if (!uses_templates() && (words_min < 1 || words_max < words_min))
        throw ConfigError("invalid sentence length range");
    if (frames_per_char_min < 1 || frames_per_char_max < frames_per_char_min)
        throw ConfigError("invalid frames-per-character range");
    if (feature_dim < 1) throw ConfigError("feature_dim must be positive");
    if (noise_scale < 0 || speaker_offset_scale < 0 || domain_shift < 0)
        throw ConfigError("scales must be non-negative");
    if (deviation_prob < 0 || deviation_prob > 1)
        throw ConfigError("deviation_prob must be in [0, 1]");
}

DomainSpec default_domain_G() {
    DomainSpec g;
    g.tag = 'G';
    g.words = german_word_list();
    g.speakers = 200;
    g.utterances = 25000;
    g.words_min = 2;
    g.words_max = 4;
    g.speaker_offset_scale = 0.4;
    g.domain_shift = 0.0;
    g.accent_groups = 8;
    g.accent_scale = 0.6;
    g.noise_scale = 0.25;
    g.seed = 101;
    g.split = SplitSpec{0.8, 0.1, 0.1, true};
    return g;
}

DomainSpec default_domain_S() {
    DomainSpec s;
    s.tag = 'S';
    s.templates = command_templates();
    s.speakers = 30;
    s.deviation_prob = 0.15;
    s.speaker_offset_scale = 0.5;
    s.domain_shift = 4.0;
    s.domain_proto_scale = 1.0;
    s.noise_scale = 0.25;
    s.seed = 202;
    s.split = SplitSpec{0.9, 0.05, 0.05, true};
    return s;
}

namespace {

// Largest-remainder allocation of n items over the three splits; remainder
// ties go to the later split so the test split is never starved.
std::array<int, 3> allocate_counts(int n, const SplitSpec& sp) {
    const double frac[3] = {sp.train, sp.dev, sp.test};
    std::array<int, 3> counts{};
    double rem[3];
    int assigned = 0;
    for (int i = 0; i < 3; ++i) {
        const double exact = frac[i] * n;
        counts[static_cast<size_t>(i)] = static_cast<int>(std::floor(exact + 1e-9));
        rem[i] = exact - counts[static_cast<size_t>(i)];
        assigned += counts[static_cast<size_t>(i)];
    }
    int leftover = n - assigned;
    std::array<int, 3> order = {0, 1, 2};
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (rem[a] != rem[b]) return rem[a] > rem[b];
        return a > b;
    });
    for (int k = 0; k < leftover; ++k) ++counts[static_cast<size_t>(order[static_cast<size_t>(k)])];
    return counts;
}

// Character prototypes: a base table shared by every domain with the same
// acoustic seed, plus an optional domain-specific component (a change in
// recording conditions and articulation) and per-accent-group variants that
// give a broad domain several ways to pronounce the same character.
struct PrototypeTable {
    const DomainSpec& spec;
    std::unordered_map<uint64_t, std::vector<float>> cache;

    const std::vector<float>& get(uint32_t cp, int speaker) {
        const int group = spec.accent_groups > 1 ? speaker % spec.accent_groups : 0;
        const uint64_t key = (static_cast<uint64_t>(group) << 32) | cp;
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
        Rng rng = Rng::seeded(spec.acoustic_seed).split("proto", cp);
        std::vector<float> proto(static_cast<size_t>(spec.feature_dim));
        for (float& v : proto) v = static_cast<float>(rng.next_normal());
        if (spec.domain_proto_scale != 0.0) {
            Rng drng = Rng::seeded(spec.acoustic_seed)
                           .split("domain-proto", static_cast<uint64_t>(spec.tag))
                           .split(cp);
            for (float& v : proto)
                v += static_cast<float>(drng.next_normal() * spec.domain_proto_scale);
        }
        if (spec.accent_scale != 0.0 && spec.accent_groups > 1) {
            Rng arng = Rng::seeded(spec.acoustic_seed)
                           .split("accent", static_cast<uint64_t>(group))
                           .split(cp);
            for (float& v : proto) v += static_cast<float>(arng.next_normal() * spec.accent_scale);
        }
        return cache.emplace(key, std::move(proto)).first->second;
    }
};

std::vector<float> domain_offset(const DomainSpec& spec) {
    std::vector<float> dir(static_cast<size_t>(spec.feature_dim), 0.0f);
    if (spec.domain_shift == 0.0) return dir;
    Rng rng = Rng::seeded(spec.acoustic_seed).split("domain-shift", static_cast<uint64_t>(spec.tag));
    double norm = 0.0;
    for (float& v : dir) {
        v = static_cast<float>(rng.next_normal());
        norm += static_cast<double>(v) * v;
    }
    norm = std::sqrt(norm);
    for (float& v : dir) v = static_cast<float>(v / norm * spec.domain_shift);
    return dir;
}

std::vector<float> speaker_offset(const DomainSpec& spec, int speaker,
                                  const std::vector<float>& shift) {
    Rng rng = Rng::seeded(spec.seed).split("speaker", static_cast<uint64_t>(speaker));
    std::vector<float> off(shift);
    for (float& v : off) v += static_cast<float>(rng.next_normal() * spec.speaker_offset_scale);
    return off;
}

// Rendering is keyed by (transcript, speaker): the same sentence spoken by
// the same speaker under the same seed is always the same feature sequence.
Tensor<float> render_features(const DomainSpec& spec, PrototypeTable& protos,
                              const std::string& transcript, int speaker,
                              const std::vector<float>& offset) {
    Rng rng = Rng::seeded(spec.seed).split("render").split(transcript).split(
        static_cast<uint64_t>(speaker));
    const std::vector<uint32_t> cps = utf8_decode(transcript);
    std::vector<int> frames(cps.size());
    const int span = spec.frames_per_char_max - spec.frames_per_char_min + 1;
    int64_t total = 0;
    int64_t closures = 0;
    for (size_t i = 0; i < cps.size(); ++i) {
        frames[i] = spec.frames_per_char_min +
                    static_cast<int>(rng.next_below(static_cast<uint64_t>(span)));
        total += frames[i];
        // doubled characters are separated by one low-energy closure frame,
        // like a stop closure; it also keeps every CTC target alignable
        if (i > 0 && cps[i] == cps[i - 1]) ++closures;
    }
    Tensor<float> feats({total + closures, spec.feature_dim});
    int64_t row = 0;
    auto emit = [&](const std::vector<float>* proto) {
        for (int64_t d = 0; d < spec.feature_dim; ++d) {
            const float base = proto ? (*proto)[static_cast<size_t>(d)] : 0.0f;
            feats(row, d) = base + offset[static_cast<size_t>(d)] +
                            static_cast<float>(rng.next_normal() * spec.noise_scale);
        }
        ++row;
    };
    for (size_t i = 0; i < cps.size(); ++i) {
        if (i > 0 && cps[i] == cps[i - 1]) emit(nullptr);
        const std::vector<float>& proto = protos.get(cps[i], speaker);
        for (int f = 0; f < frames[i]; ++f) emit(&proto);
    }
    return feats;
}

}  // namespace

std::string apply_speaker_deviation(const std::string& tmpl, Rng& rng, double prob) {
    if (tmpl.empty()) throw ArgumentError("cannot deviate an empty template");
    const double u = rng.next_double();
    if (u >= prob) return tmpl;
    std::vector<std::string> words = split_words(tmpl);
    const uint64_t op = rng.next_below(3);
    if (op == 0) {  // duplicate one word
        const size_t pos = rng.next_below(words.size());
        words.insert(words.begin() + static_cast<ptrdiff_t>(pos), words[pos]);
    } else if (op == 1) {  // delete one word, never emptying the transcript
        if (words.size() > 1) {
            const size_t pos = rng.next_below(words.size());
            words.erase(words.begin() + static_cast<ptrdiff_t>(pos));
        }
    } else {  // insert a filler word
        const auto& fillers = filler_words();
        const size_t pos = rng.next_below(words.size() + 1);
        words.insert(words.begin() + static_cast<ptrdiff_t>(pos),
                     fillers[rng.next_below(fillers.size())]);
    }
    std::string out;
    for (size_t i = 0; i < words.size(); ++i) {
        if (i) out += ' ';
        out += words[i];
    }
    return out;
}

namespace {

struct UtteranceMeta {
    std::string id;
    int speaker;
    std::string transcript;
};

std::vector<UtteranceMeta> all_metadata(const DomainSpec& spec) {
    std::vector<UtteranceMeta> metas;
    if (spec.uses_templates()) {
        const int n_templates = static_cast<int>(spec.templates.size());
        metas.reserve(static_cast<size_t>(spec.speakers * n_templates));
        for (int s = 0; s < spec.speakers; ++s) {
            for (int t = 0; t < n_templates; ++t) {
                Rng rng = Rng::seeded(spec.seed).split("s-utt",
                                                       static_cast<uint64_t>(s) * n_templates + t);
                std::ostringstream id;
                id << spec.tag << "_s" << s << "_t" << t;
                metas.push_back(UtteranceMeta{
                    id.str(), s,
                    apply_speaker_deviation(spec.templates[static_cast<size_t>(t)], rng,
                                            spec.deviation_prob)});
            }
        }
        return metas;
    }
    metas.reserve(static_cast<size_t>(spec.utterances));
    for (int i = 0; i < spec.utterances; ++i) {
        Rng rng = Rng::seeded(spec.seed).split("g-utt", static_cast<uint64_t>(i));
        const int speaker = i % spec.speakers;  // balanced; keeps disjoint splits exact
        const int words =
            spec.words_min +
            static_cast<int>(rng.next_below(static_cast<uint64_t>(spec.words_max - spec.words_min + 1)));
        std::string sentence;
        for (int w = 0; w < words; ++w) {
            if (w) sentence += ' ';
            sentence += spec.words[rng.next_below(spec.words.size())];
        }
        std::ostringstream id;
        id << spec.tag << '_';
        id.fill('0');
        id.width(6);
        id << i;
        metas.push_back(UtteranceMeta{id.str(), speaker, std::move(sentence)});
    }
    return metas;
}

}  // namespace

std::vector<Utterance> generate_domain(const DomainSpec& spec, Split which) {
    spec.validate();
    std::vector<UtteranceMeta> metas = all_metadata(spec);
    const int part = which == Split::Train ? 0 : which == Split::Dev ? 1 : 2;
    std::vector<size_t> picked;
    if (spec.split.speaker_disjoint) {
        const std::array<int, 3> counts = allocate_counts(spec.speakers, spec.split);
        const int s0 = part == 0 ? 0 : part == 1 ? counts[0] : counts[0] + counts[1];
        const int s1 = s0 + counts[static_cast<size_t>(part)];
        for (size_t i = 0; i < metas.size(); ++i)
            if (metas[i].speaker >= s0 && metas[i].speaker < s1) picked.push_back(i);
    } else {
        const std::array<int, 3> counts = allocate_counts(static_cast<int>(metas.size()), spec.split);
        const int i0 = part == 0 ? 0 : part == 1 ? counts[0] : counts[0] + counts[1];
        for (int i = i0; i < i0 + counts[static_cast<size_t>(part)]; ++i)
            picked.push_back(static_cast<size_t>(i));
    }

    PrototypeTable protos{spec, {}};
    const std::vector<float> shift = domain_offset(spec);
    std::unordered_map<int, std::vector<float>> offsets;
    std::vector<Utterance> out;
    out.reserve(picked.size());
    for (size_t i : picked) {
        UtteranceMeta& meta = metas[i];
        auto it = offsets.find(meta.speaker);
        if (it == offsets.end())
            it = offsets.emplace(meta.speaker, speaker_offset(spec, meta.speaker, shift)).first;
        Utterance u;
        u.id = std::move(meta.id);
        u.speaker = meta.speaker;
        u.domain = spec.tag;
        u.features = render_features(spec, protos, meta.transcript, meta.speaker, it->second);
        u.transcript = std::move(meta.transcript);
        out.push_back(std::move(u));
    }
    return out;
}

DomainData generate_all_splits(const DomainSpec& spec) {
    return DomainData{generate_domain(spec, Split::Train), generate_domain(spec, Split::Dev),
                      generate_domain(spec, Split::Test)};
}

// --- manifest + feature file IO -----------------------------------------

namespace {

void write_u32(std::ostream& os, uint32_t v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

uint32_t read_u32(std::istream& is) {
    uint32_t v = 0;
    is.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}

}  // namespace

void write_feature_file(const std::filesystem::path& path, const Tensor<float>& features) {
    features.require_rank(2);
    std::ofstream os(path, std::ios::binary);
    if (!os) throw IoError("cannot write feature file " + path.string());
    os.write("RLAB", 4);
    write_u32(os, 1);
    write_u32(os, static_cast<uint32_t>(features.shape[0]));
    write_u32(os, static_cast<uint32_t>(features.shape[1]));
    os.write(reinterpret_cast<const char*>(features.data.data()),
             static_cast<std::streamsize>(features.data.size() * sizeof(float)));
    if (!os) throw IoError("short write to " + path.string());
}

Tensor<float> read_feature_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw IoError("cannot open feature file " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "RLAB", 4) != 0)
        throw IoError("bad magic in feature file " + path.string());
    const uint32_t version = read_u32(is);
    if (version != 1) throw IoError("unsupported feature file version " + std::to_string(version));
    const uint32_t rows = read_u32(is);
    const uint32_t cols = read_u32(is);
    Tensor<float> t({static_cast<int64_t>(rows), static_cast<int64_t>(cols)});
    is.read(reinterpret_cast<char*>(t.data.data()),
            static_cast<std::streamsize>(t.data.size() * sizeof(float)));
    if (!is) throw IoError("truncated feature file " + path.string());
    return t;
}

void export_dataset(const std::filesystem::path& dir, const std::vector<Utterance>& data) {
    std::filesystem::create_directories(dir / "feats");
    std::ofstream manifest(dir / "manifest.jsonl");
    if (!manifest) throw IoError("cannot write manifest in " + dir.string());
    for (const Utterance& u : data) {
        const std::string rel = "feats/" + u.id + ".rlabf";
        write_feature_file(dir / rel, u.features);
        nlohmann::json rec = {
            {"id", u.id},
            {"speaker", u.speaker},
            {"domain", std::string(1, u.domain)},
            {"transcript", u.transcript},
            {"features", rel},
        };
        manifest << rec.dump() << '\n';
    }
}

std::vector<Utterance> import_dataset(const std::filesystem::path& manifest_path) {
    std::ifstream is(manifest_path);
    if (!is) throw IoError("cannot open manifest " + manifest_path.string());
    const std::filesystem::path base = manifest_path.parent_path();
    std::vector<Utterance> out;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        nlohmann::json rec = nlohmann::json::parse(line, nullptr, false);
        if (rec.is_discarded()) throw IoError("malformed manifest line: " + line);
        Utterance u;
        u.id = rec.at("id").get<std::string>();
        u.speaker = rec.at("speaker").get<int>();
        u.domain = rec.at("domain").get<std::string>().at(0);
        u.transcript = rec.at("transcript").get<std::string>();
        u.features = read_feature_file(base / rec.at("features").get<std::string>());
        out.push_back(std::move(u));
    }
    return out;
}

}  // namespace rlab
