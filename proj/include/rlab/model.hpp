#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rlab/ctc.hpp"
#include "rlab/ops.hpp"
#include "rlab/rng.hpp"
#include "rlab/tape.hpp"
#include "rlab/text.hpp"

namespace rlab {

inline constexpr double kLayerNormEps = 1e-5;
inline constexpr double kInitStd = 0.02;

enum class Arch { EncCtc, EncDec };

inline const char* arch_name(Arch a) { return a == Arch::EncCtc ? "enc_ctc" : "enc_dec"; }

struct ModelConfig {
    Arch arch = Arch::EncCtc;
    int encoder_layers = 8;
    int decoder_layers = 0;
    int model_dim = 64;
    int heads = 4;
    int ff_dim = 128;
    int feature_dim = 16;
    float dropout_p = 0.1f;
    int max_target_len = 64;
    Vocab vocab;

    void validate() const {
        if (model_dim <= 0 || heads <= 0 || ff_dim <= 0 || feature_dim <= 0 || encoder_layers <= 0)
            throw ConfigError("model dimensions must be positive");
        if (model_dim % heads != 0) throw ConfigError("model_dim must be divisible by heads");
        if (dropout_p < 0.0f || dropout_p >= 1.0f) throw ConfigError("dropout_p must be in [0, 1)");
        if (arch == Arch::EncCtc) {
            if (decoder_layers != 0) throw ConfigError("ENC_CTC models have no decoder layers");
            if (vocab.blank_id < 0) throw ConfigError("ENC_CTC vocab needs a blank symbol");
        } else {
            if (decoder_layers <= 0) throw ConfigError("ENC_DEC models need decoder layers");
            if (vocab.bos_id < 0 || vocab.eos_id < 0)
                throw ConfigError("ENC_DEC vocab needs BOS and EOS symbols");
            if (max_target_len <= 0) throw ConfigError("max_target_len must be positive");
        }
    }
};

template <typename T>
struct AttentionWeights {
    Parameter<T> wq, bq, wk, bk, wv, bv, wo, bo;
};

template <typename T>
struct TransformerBlock {
    Parameter<T> ln1_g, ln1_b;
    AttentionWeights<T> self_attn;
    bool has_cross = false;
    Parameter<T> lnc_g, lnc_b;
    AttentionWeights<T> cross_attn;
    Parameter<T> ln2_g, ln2_b;
    Parameter<T> ff_w1, ff_b1, ff_w2, ff_b2;
};

// Pre-norm transformer; encoder-only with a CTC head, or encoder-decoder
// with teacher forcing. The input projection plays the role of the acoustic
// feature extractor.
template <typename T>
struct Model {
    ModelConfig config;
    Parameter<T> input_w, input_b;
    std::vector<TransformerBlock<T>> encoder;
    Parameter<T> enc_ln_g, enc_ln_b;
    Parameter<T> tok_emb;  // EncDec only
    std::vector<TransformerBlock<T>> decoder;
    Parameter<T> dec_ln_g, dec_ln_b;
    Parameter<T> head_w, head_b;
    bool grads_ready = false;

    template <typename Self, typename F>
    static void visit(Self& m, F&& f) {
        auto attn = [&](auto& a) {
            f(a.wq), f(a.bq), f(a.wk), f(a.bk), f(a.wv), f(a.bv), f(a.wo), f(a.bo);
        };
        auto block = [&](auto& b) {
            f(b.ln1_g), f(b.ln1_b);
            attn(b.self_attn);
            if (b.has_cross) {
                f(b.lnc_g), f(b.lnc_b);
                attn(b.cross_attn);
            }
            f(b.ln2_g), f(b.ln2_b);
            f(b.ff_w1), f(b.ff_b1), f(b.ff_w2), f(b.ff_b2);
        };
        f(m.input_w), f(m.input_b);
        for (auto& b : m.encoder) block(b);
        f(m.enc_ln_g), f(m.enc_ln_b);
        if (m.config.arch == Arch::EncDec) {
            f(m.tok_emb);
            for (auto& b : m.decoder) block(b);
            f(m.dec_ln_g), f(m.dec_ln_b);
        }
        f(m.head_w), f(m.head_b);
    }

    std::vector<Parameter<T>*> parameters() {
        std::vector<Parameter<T>*> out;
        visit(*this, [&](Parameter<T>& p) { out.push_back(&p); });
        return out;
    }
    std::vector<const Parameter<T>*> parameters() const {
        std::vector<const Parameter<T>*> out;
        visit(*this, [&](const Parameter<T>& p) { out.push_back(&p); });
        return out;
    }

    void zero_grads() {
        visit(*this, [](Parameter<T>& p) { p.zero_grad(); });
        grads_ready = false;
    }

    int64_t param_count() const {
        int64_t n = 0;
        visit(*this, [&](const Parameter<T>& p) { n += p.value.numel(); });
        return n;
    }
};

namespace detail {

template <typename T>
Parameter<T> make_weight(const std::string& name, std::vector<int64_t> shape, const Rng& root) {
    Tensor<T> t(std::move(shape));
    Rng rng = root.split(name);
    for (T& x : t.data) x = static_cast<T>(rng.next_normal() * kInitStd);
    return Parameter<T>(name, std::move(t));
}

template <typename T>
Parameter<T> make_const(const std::string& name, std::vector<int64_t> shape, T fill) {
    return Parameter<T>(name, Tensor<T>::full(std::move(shape), fill));
}

template <typename T>
AttentionWeights<T> make_attention(const std::string& prefix, int dim, const Rng& rng) {
    AttentionWeights<T> a;
    a.wq = make_weight<T>(prefix + ".wq", {dim, dim}, rng);
    a.bq = make_const<T>(prefix + ".bq", {dim}, T(0));
    a.wk = make_weight<T>(prefix + ".wk", {dim, dim}, rng);
    a.bk = make_const<T>(prefix + ".bk", {dim}, T(0));
    a.wv = make_weight<T>(prefix + ".wv", {dim, dim}, rng);
    a.bv = make_const<T>(prefix + ".bv", {dim}, T(0));
    a.wo = make_weight<T>(prefix + ".wo", {dim, dim}, rng);
    a.bo = make_const<T>(prefix + ".bo", {dim}, T(0));
    return a;
}

template <typename T>
TransformerBlock<T> make_block(const std::string& prefix, const ModelConfig& c, bool cross,
                               const Rng& rng) {
    TransformerBlock<T> b;
    b.ln1_g = make_const<T>(prefix + ".ln1.g", {c.model_dim}, T(1));
    b.ln1_b = make_const<T>(prefix + ".ln1.b", {c.model_dim}, T(0));
    b.self_attn = make_attention<T>(prefix + ".self_attn", c.model_dim, rng);
    b.has_cross = cross;
    if (cross) {
        b.lnc_g = make_const<T>(prefix + ".ln_cross.g", {c.model_dim}, T(1));
        b.lnc_b = make_const<T>(prefix + ".ln_cross.b", {c.model_dim}, T(0));
        b.cross_attn = make_attention<T>(prefix + ".cross_attn", c.model_dim, rng);
    }
    b.ln2_g = make_const<T>(prefix + ".ln2.g", {c.model_dim}, T(1));
    b.ln2_b = make_const<T>(prefix + ".ln2.b", {c.model_dim}, T(0));
    b.ff_w1 = make_weight<T>(prefix + ".ff.w1", {c.model_dim, c.ff_dim}, rng);
    b.ff_b1 = make_const<T>(prefix + ".ff.b1", {c.ff_dim}, T(0));
    b.ff_w2 = make_weight<T>(prefix + ".ff.w2", {c.ff_dim, c.model_dim}, rng);
    b.ff_b2 = make_const<T>(prefix + ".ff.b2", {c.model_dim}, T(0));
    return b;
}

}  // namespace detail

template <typename T>
Model<T> build_model(const ModelConfig& config, const Rng& init_rng) {
    config.validate();
    Model<T> m;
    m.config = config;
    m.input_w = detail::make_weight<T>("input_proj.w", {config.feature_dim, config.model_dim},
                                       init_rng);
    m.input_b = detail::make_const<T>("input_proj.b", {config.model_dim}, T(0));
    for (int i = 0; i < config.encoder_layers; ++i)
        m.encoder.push_back(detail::make_block<T>("encoder.layer." + std::to_string(i), config,
                                                  /*cross=*/false, init_rng));
    m.enc_ln_g = detail::make_const<T>("encoder.ln_final.g", {config.model_dim}, T(1));
    m.enc_ln_b = detail::make_const<T>("encoder.ln_final.b", {config.model_dim}, T(0));
    if (config.arch == Arch::EncDec) {
        m.tok_emb = detail::make_weight<T>("decoder.tok_emb",
                                           {config.vocab.size(), config.model_dim}, init_rng);
        for (int i = 0; i < config.decoder_layers; ++i)
            m.decoder.push_back(detail::make_block<T>("decoder.layer." + std::to_string(i), config,
                                                      /*cross=*/true, init_rng));
        m.dec_ln_g = detail::make_const<T>("decoder.ln_final.g", {config.model_dim}, T(1));
        m.dec_ln_b = detail::make_const<T>("decoder.ln_final.b", {config.model_dim}, T(0));
    }
    m.head_w = detail::make_weight<T>("head.w", {config.model_dim, config.vocab.size()}, init_rng);
    m.head_b = detail::make_const<T>("head.b", {config.vocab.size()}, T(0));
    return m;
}

template <typename T>
Tensor<T> sinusoidal_positions(int64_t positions, int64_t dim) {
    Tensor<T> pe({positions, dim});
    for (int64_t p = 0; p < positions; ++p) {
        for (int64_t i = 0; i < dim; i += 2) {
            const double freq = std::pow(10000.0, -static_cast<double>(i) / static_cast<double>(dim));
            pe(p, i) = static_cast<T>(std::sin(static_cast<double>(p) * freq));
            if (i + 1 < dim) pe(p, i + 1) = static_cast<T>(std::cos(static_cast<double>(p) * freq));
        }
    }
    return pe;
}

// Per-forward context: tape, train/eval mode and the dropout stream.
template <typename T>
struct ForwardCtx {
    Tape<T>& tape;
    bool training = false;
    float dropout_p = 0.0f;
    Rng rng;

    Value<T> p(Parameter<T>& par) { return tape.use(par); }
    Value<T> drop(Value<T> v) {
        return dropout(v, static_cast<double>(dropout_p), training, rng);
    }
};

namespace detail {

template <typename T>
Value<T> layer_norm_affine(ForwardCtx<T>& ctx, Value<T> x, Parameter<T>& g, Parameter<T>& b) {
    return add(mul(layer_norm_lastdim(x, kLayerNormEps), ctx.p(g)), ctx.p(b));
}

template <typename T>
Value<T> multihead_attention(ForwardCtx<T>& ctx, AttentionWeights<T>& w, Value<T> q_in,
                             Value<T> kv_in, int heads, bool causal) {
    const int64_t dim = ctx.tape.value(q_in).shape[1];
    const int64_t head_dim = dim / heads;
    Value<T> q = add(matmul(q_in, ctx.p(w.wq)), ctx.p(w.bq));
    Value<T> k = add(matmul(kv_in, ctx.p(w.wk)), ctx.p(w.bk));
    Value<T> v = add(matmul(kv_in, ctx.p(w.wv)), ctx.p(w.bv));
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(head_dim));
    Value<T> mask;
    if (causal) mask = ctx.tape.constant(causal_mask<T>(ctx.tape.value(q).shape[0]));
    std::vector<Value<T>> ctx_heads;
    ctx_heads.reserve(static_cast<size_t>(heads));
    for (int h = 0; h < heads; ++h) {
        Value<T> qh = slice(q, 1, h * head_dim, head_dim);
        Value<T> kh = slice(k, 1, h * head_dim, head_dim);
        Value<T> vh = slice(v, 1, h * head_dim, head_dim);
        Value<T> scores = scale(matmul(qh, transpose(kh)), inv_sqrt);
        if (causal) scores = add(scores, mask);
        Value<T> attn = softmax_lastdim(scores);
        ctx_heads.push_back(matmul(attn, vh));
    }
    Value<T> merged = concat(ctx_heads, 1);
    return add(matmul(merged, ctx.p(w.wo)), ctx.p(w.bo));
}

template <typename T>
Value<T> block_forward(ForwardCtx<T>& ctx, TransformerBlock<T>& b, Value<T> x, int heads,
                       bool causal, Value<T>* enc_out) {
    Value<T> h = layer_norm_affine(ctx, x, b.ln1_g, b.ln1_b);
    x = add(x, ctx.drop(multihead_attention(ctx, b.self_attn, h, h, heads, causal)));
    if (b.has_cross) {
        Value<T> hc = layer_norm_affine(ctx, x, b.lnc_g, b.lnc_b);
        x = add(x, ctx.drop(multihead_attention(ctx, b.cross_attn, hc, *enc_out, heads, false)));
    }
    Value<T> h2 = layer_norm_affine(ctx, x, b.ln2_g, b.ln2_b);
    Value<T> ff = add(matmul(gelu(add(matmul(h2, ctx.p(b.ff_w1)), ctx.p(b.ff_b1))), ctx.p(b.ff_w2)),
                      ctx.p(b.ff_b2));
    return add(x, ctx.drop(ff));
}

template <typename T>
Value<T> encoder_forward(ForwardCtx<T>& ctx, Model<T>& m, const Tensor<T>& features) {
    features.require_rank(2);
    if (features.shape[1] != m.config.feature_dim)
        throw DimensionError("features have " + std::to_string(features.shape[1]) +
                             " dims, model expects " + std::to_string(m.config.feature_dim));
    Value<T> x = add(matmul(ctx.tape.constant(features), ctx.p(m.input_w)), ctx.p(m.input_b));
    x = add(x, ctx.tape.constant(sinusoidal_positions<T>(features.shape[0], m.config.model_dim)));
    x = ctx.drop(x);
    for (auto& b : m.encoder)
        x = block_forward(ctx, b, x, m.config.heads, false, static_cast<Value<T>*>(nullptr));
    return layer_norm_affine(ctx, x, m.enc_ln_g, m.enc_ln_b);
}

}  // namespace detail

// Per-frame logits over the vocabulary (blank included).
template <typename T>
Value<T> forward_ctc(Model<T>& m, Tape<T>& tape, const Tensor<T>& features, bool training,
                     Rng dropout_rng = Rng()) {
    if (m.config.arch != Arch::EncCtc)
        throw ArgumentError("forward_ctc called on a non-CTC architecture");
    ForwardCtx<T> ctx{tape, training, m.config.dropout_p, dropout_rng};
    Value<T> x = detail::encoder_forward(ctx, m, features);
    return add(matmul(x, ctx.p(m.head_w)), ctx.p(m.head_b));
}

// Teacher-forced next-token logits at every prefix position.
template <typename T>
Value<T> forward_encdec(Model<T>& m, Tape<T>& tape, const Tensor<T>& features,
                        const std::vector<int>& target_prefix, bool training,
                        Rng dropout_rng = Rng()) {
    if (m.config.arch != Arch::EncDec)
        throw ArgumentError("forward_encdec called on a non-encoder-decoder architecture");
    if (target_prefix.empty() || target_prefix[0] != m.config.vocab.bos_id)
        throw ArgumentError("target prefix must begin with BOS");
    ForwardCtx<T> ctx{tape, training, m.config.dropout_p, dropout_rng};
    Value<T> enc = detail::encoder_forward(ctx, m, features);
    Value<T> y = embedding_lookup(ctx.p(m.tok_emb), target_prefix);
    y = add(y, ctx.tape.constant(sinusoidal_positions<T>(
                  static_cast<int64_t>(target_prefix.size()), m.config.model_dim)));
    y = ctx.drop(y);
    for (auto& b : m.decoder) y = detail::block_forward(ctx, b, y, m.config.heads, true, &enc);
    y = detail::layer_norm_affine(ctx, y, m.dec_ln_g, m.dec_ln_b);
    return add(matmul(y, ctx.p(m.head_w)), ctx.p(m.head_b));
}

// Copies each parameter gradient recorded on `tape` into the model, scaled;
// used to average per-utterance contributions over a batch.
template <typename T>
void add_tape_grads(Model<T>& m, Tape<T>& tape, T scl = T(1)) {
    for (auto& [p, g] : tape.param_grads()) {
        for (int64_t i = 0; i < g->numel(); ++i) p->gradient.data[i] += scl * g->data[i];
    }
    Model<T>::visit(m, [](Parameter<T>& p) { p.has_grad = true; });
    m.grads_ready = true;
}

}  // namespace rlab
