#pragma once

#include <cstring>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "rlab/model.hpp"

namespace rlab {

// Which layers stay trainable during fine-tuning. Indices are 0-based block
// indices; the final layer norm of a stack belongs to that stack's last
// block. The output head (and for encoder-decoder models the token
// embedding) has its own flag, as does the input projection, which stands in
// for the acoustic feature extractor.
struct LayerConfig {
    std::set<int> encoder_trainable;
    std::set<int> decoder_trainable;
    bool head_trainable = true;
    bool input_projection_trainable = false;
};

enum class PresetScope { Both, EncoderOnly, DecoderOnly };

inline const char* scope_name(PresetScope s) {
    switch (s) {
        case PresetScope::EncoderOnly: return "encoder-only";
        case PresetScope::DecoderOnly: return "decoder-only";
        default: return "both";
    }
}

inline PresetScope parse_scope(std::string_view s) {
    if (s == "both") return PresetScope::Both;
    if (s == "encoder-only" || s == "encoder" || s == "enc") return PresetScope::EncoderOnly;
    if (s == "decoder-only" || s == "decoder" || s == "dec") return PresetScope::DecoderOnly;
    throw ConfigError("unknown scope '" + std::string(s) +
                      "' (valid: both, encoder-only, decoder-only)");
}

namespace detail {

struct Segment {
    int begin, end;  // half-open block range at canonical depth
};

using PresetTable = std::map<std::string, std::vector<Segment>, std::less<>>;

inline const PresetTable& encoder_only_presets() {
    // Canonical depth 24.
    static const PresetTable t = {
        {"all", {{0, 24}}},          {"first12", {{0, 12}}},
        {"last12", {{12, 24}}},      {"f4-i4-l4", {{0, 4}, {10, 14}, {20, 24}}},
        {"f2-i2-l2", {{0, 2}, {11, 13}, {22, 24}}}, {"last6", {{18, 24}}},
    };
    return t;
}

inline const PresetTable& enc_dec_presets() {
    // Canonical depth 12, applied per component.
    static const PresetTable t = {
        {"all", {{0, 12}}},          {"first6", {{0, 6}}},
        {"last6", {{6, 12}}},        {"f1-i2-l1", {{0, 1}, {5, 7}, {11, 12}}},
        {"f2-i2-l2", {{0, 2}, {5, 7}, {10, 12}}},   {"last3", {{9, 12}}},
    };
    return t;
}

// Rescale canonical segment boundaries to `depth` by flooring the boundary
// fractions; every canonical segment keeps at least one block.
inline std::set<int> scale_segments(const std::vector<Segment>& segs, int canonical, int depth) {
    std::set<int> out;
    for (const Segment& s : segs) {
        int begin = static_cast<int>(static_cast<int64_t>(s.begin) * depth / canonical);
        int end = static_cast<int>(static_cast<int64_t>(s.end) * depth / canonical);
        if (end <= begin) end = begin + 1;
        if (end > depth) end = depth;
        for (int i = begin; i < end; ++i) out.insert(i);
    }
    return out;
}

inline std::string known_names(const PresetTable& t) {
    std::ostringstream os;
    bool first = true;
    for (const auto& [name, _] : t) {
        os << (first ? "" : ", ") << name;
        first = false;
    }
    return os.str();
}

}  // namespace detail

// Named layer configuration. Encoder-only models (decoder_depth == 0) use
// the 24-layer preset family; encoder-decoder models use the 12-layer family
// with a scope selecting encoder, decoder, or both components. At canonical
// depths the presets reproduce their published index lists exactly; at other
// depths boundaries scale proportionally.
inline LayerConfig preset(std::string_view name, int encoder_depth, int decoder_depth,
                          PresetScope scope = PresetScope::Both) {
    if (encoder_depth <= 0) throw ConfigError("encoder depth must be positive");
    if (decoder_depth < 0) throw ConfigError("decoder depth must be non-negative");
    const bool enc_dec = decoder_depth > 0;
    const auto& table = enc_dec ? detail::enc_dec_presets() : detail::encoder_only_presets();
    auto it = table.find(name);
    if (it == table.end())
        throw ConfigError("unknown layer preset '" + std::string(name) + "' for " +
                          (enc_dec ? "encoder-decoder" : "encoder-only") +
                          " models (valid: " + detail::known_names(table) + ")");
    const int canonical = enc_dec ? 12 : 24;
    LayerConfig cfg;
    cfg.head_trainable = true;
    if (!enc_dec) {
        cfg.encoder_trainable = detail::scale_segments(it->second, canonical, encoder_depth);
        cfg.input_projection_trainable = (name == "all");
        return cfg;
    }
    if (scope != PresetScope::DecoderOnly)
        cfg.encoder_trainable = detail::scale_segments(it->second, canonical, encoder_depth);
    if (scope != PresetScope::EncoderOnly)
        cfg.decoder_trainable = detail::scale_segments(it->second, canonical, decoder_depth);
    cfg.input_projection_trainable = (name == "all" && scope != PresetScope::DecoderOnly);
    return cfg;
}

namespace detail {

template <typename T>
void set_block_trainable(TransformerBlock<T>& b, bool on) {
    auto set = [on](Parameter<T>& p) { p.trainable = on; };
    set(b.ln1_g), set(b.ln1_b);
    set(b.self_attn.wq), set(b.self_attn.bq), set(b.self_attn.wk), set(b.self_attn.bk);
    set(b.self_attn.wv), set(b.self_attn.bv), set(b.self_attn.wo), set(b.self_attn.bo);
    if (b.has_cross) {
        set(b.lnc_g), set(b.lnc_b);
        set(b.cross_attn.wq), set(b.cross_attn.bq), set(b.cross_attn.wk), set(b.cross_attn.bk);
        set(b.cross_attn.wv), set(b.cross_attn.bv), set(b.cross_attn.wo), set(b.cross_attn.bo);
    }
    set(b.ln2_g), set(b.ln2_b);
    set(b.ff_w1), set(b.ff_b1), set(b.ff_w2), set(b.ff_b2);
}

}  // namespace detail

// Marks exactly the configured parameters trainable. Freezing blocks updates
// only; gradients still flow through frozen layers during backward.
template <typename T>
void apply_layer_config(Model<T>& m, const LayerConfig& cfg) {
    const int enc_depth = m.config.encoder_layers;
    const int dec_depth = m.config.decoder_layers;
    for (int i : cfg.encoder_trainable)
        if (i < 0 || i >= enc_depth)
            throw ConfigError("encoder layer index " + std::to_string(i) +
                              " out of range for depth " + std::to_string(enc_depth));
    for (int i : cfg.decoder_trainable)
        if (i < 0 || i >= dec_depth)
            throw ConfigError("decoder layer index " + std::to_string(i) +
                              " out of range for depth " + std::to_string(dec_depth));
    m.input_w.trainable = m.input_b.trainable = cfg.input_projection_trainable;
    for (int i = 0; i < enc_depth; ++i)
        detail::set_block_trainable(m.encoder[static_cast<size_t>(i)], cfg.encoder_trainable.count(i) > 0);
    const bool enc_last = cfg.encoder_trainable.count(enc_depth - 1) > 0;
    m.enc_ln_g.trainable = m.enc_ln_b.trainable = enc_last;
    if (m.config.arch == Arch::EncDec) {
        m.tok_emb.trainable = cfg.head_trainable;
        for (int i = 0; i < dec_depth; ++i)
            detail::set_block_trainable(m.decoder[static_cast<size_t>(i)],
                                        cfg.decoder_trainable.count(i) > 0);
        const bool dec_last = cfg.decoder_trainable.count(dec_depth - 1) > 0;
        m.dec_ln_g.trainable = m.dec_ln_b.trainable = dec_last;
    }
    m.head_w.trainable = m.head_b.trainable = cfg.head_trainable;
}

inline LayerConfig full_trainable(const ModelConfig& c) {
    LayerConfig cfg;
    for (int i = 0; i < c.encoder_layers; ++i) cfg.encoder_trainable.insert(i);
    for (int i = 0; i < c.decoder_layers; ++i) cfg.decoder_trainable.insert(i);
    cfg.head_trainable = true;
    cfg.input_projection_trainable = true;
    return cfg;
}

template <typename T>
int64_t trainable_param_count(const Model<T>& m) {
    int64_t n = 0;
    Model<T>::visit(m, [&](const Parameter<T>& p) {
        if (p.trainable) n += p.value.numel();
    });
    return n;
}

// Byte-exact copies of all frozen parameter values, used to verify that
// training never touches them.
template <typename T>
std::vector<std::vector<T>> snapshot_frozen(const Model<T>& m) {
    std::vector<std::vector<T>> snap;
    Model<T>::visit(m, [&](const Parameter<T>& p) {
        if (!p.trainable) snap.push_back(p.value.data);
    });
    return snap;
}

template <typename T>
bool frozen_unchanged(const Model<T>& m, const std::vector<std::vector<T>>& snap) {
    size_t k = 0;
    bool ok = true;
    Model<T>::visit(m, [&](const Parameter<T>& p) {
        if (p.trainable) return;
        const std::vector<T>& old = snap[k++];
        if (old.size() != p.value.data.size() ||
            std::memcmp(old.data(), p.value.data.data(), old.size() * sizeof(T)) != 0)
            ok = false;
    });
    return ok && k == snap.size();
}

}  // namespace rlab
