#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "rlab/model.hpp"

namespace rlab {

template <typename T>
std::vector<int> ctc_greedy_ids(Model<T>& m, const Tensor<T>& features) {
    Tape<T> tape;
    Value<T> logits = forward_ctc(m, tape, features, /*training=*/false);
    return greedy_decode_ctc(tape.value(logits), m.config.vocab.blank_id);
}

namespace detail {

template <typename T>
inline void vec_matmul(const T* x, const Tensor<T>& w, T* out) {
    Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>>(out, w.shape[1]).noalias() =
        Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>>(x, w.shape[0]) * as_matrix(w);
}

template <typename T>
inline void linear_vec(const std::vector<T>& x, const Parameter<T>& w, const Parameter<T>& b,
                       std::vector<T>& out) {
    out.resize(static_cast<size_t>(w.value.shape[1]));
    vec_matmul(x.data(), w.value, out.data());
    for (size_t i = 0; i < out.size(); ++i) out[i] += b.value.data[i];
}

template <typename T>
inline void layer_norm_vec(const std::vector<T>& x, const Parameter<T>& g, const Parameter<T>& b,
                           std::vector<T>& out) {
    const size_t n = x.size();
    out.resize(n);
    T mean = T(0);
    for (T v : x) mean += v;
    mean /= static_cast<T>(n);
    T var = T(0);
    for (T v : x) var += (v - mean) * (v - mean);
    var /= static_cast<T>(n);
    const T inv = T(1) / std::sqrt(var + static_cast<T>(kLayerNormEps));
    for (size_t i = 0; i < n; ++i) out[i] = (x[i] - mean) * inv * g.value.data[i] + b.value.data[i];
}

template <typename T>
inline T gelu_scalar(T x) {
    return static_cast<T>(0.5 * static_cast<double>(x) *
                          (1.0 + std::erf(static_cast<double>(x) * 0.7071067811865475244)));
}

// Attention of a single query row against `rows` cached key/value rows.
template <typename T>
inline void attend_vec(const std::vector<T>& q, const Tensor<T>& keys, const Tensor<T>& values,
                       int64_t rows, int heads, std::vector<T>& ctx, std::vector<T>& scores) {
    const int64_t dim = static_cast<int64_t>(q.size());
    const int64_t head_dim = dim / heads;
    const T inv_sqrt = static_cast<T>(1.0 / std::sqrt(static_cast<double>(head_dim)));
    ctx.assign(static_cast<size_t>(dim), T(0));
    scores.resize(static_cast<size_t>(rows));
    for (int h = 0; h < heads; ++h) {
        const int64_t off = h * head_dim;
        T best = -std::numeric_limits<T>::infinity();
        for (int64_t r = 0; r < rows; ++r) {
            T s = T(0);
            const T* krow = keys.data.data() + r * dim + off;
            for (int64_t j = 0; j < head_dim; ++j) s += q[static_cast<size_t>(off + j)] * krow[j];
            s *= inv_sqrt;
            scores[static_cast<size_t>(r)] = s;
            best = std::max(best, s);
        }
        T denom = T(0);
        for (int64_t r = 0; r < rows; ++r) {
            scores[static_cast<size_t>(r)] = std::exp(scores[static_cast<size_t>(r)] - best);
            denom += scores[static_cast<size_t>(r)];
        }
        const T inv = T(1) / denom;
        for (int64_t r = 0; r < rows; ++r) {
            const T a = scores[static_cast<size_t>(r)] * inv;
            const T* vrow = values.data.data() + r * dim + off;
            for (int64_t j = 0; j < head_dim; ++j) ctx[static_cast<size_t>(off + j)] += a * vrow[j];
        }
    }
}

}  // namespace detail

// Greedy autoregressive decoding with cached self- and cross-attention keys.
// Mathematically the per-position computation matches forward_encdec in eval
// mode; it just avoids re-running the whole prefix at every step.
template <typename T>
class EncDecGreedyDecoder {
  public:
    EncDecGreedyDecoder(Model<T>& m, const Tensor<T>& features) : m_(m) {
        if (m.config.arch != Arch::EncDec)
            throw ArgumentError("greedy_decode_encdec called on a non-encoder-decoder model");
        Tape<T> tape;
        ForwardCtx<T> ctx{tape, false, 0.0f, Rng()};
        enc_out_ = tape.value(detail::encoder_forward(ctx, m, features));
        const int layers = m.config.decoder_layers;
        const int64_t dim = m.config.model_dim;
        const int64_t cache_rows = m.config.max_target_len + 1;
        cross_k_.reserve(layers);
        cross_v_.reserve(layers);
        for (int l = 0; l < layers; ++l) {
            cross_k_.push_back(project(enc_out_, m.decoder[l].cross_attn.wk,
                                       m.decoder[l].cross_attn.bk));
            cross_v_.push_back(project(enc_out_, m.decoder[l].cross_attn.wv,
                                       m.decoder[l].cross_attn.bv));
        }
        self_k_.assign(static_cast<size_t>(layers), Tensor<T>({cache_rows, dim}));
        self_v_.assign(static_cast<size_t>(layers), Tensor<T>({cache_rows, dim}));
        pe_ = sinusoidal_positions<T>(cache_rows, dim);
    }

    std::vector<int> run() {
        std::vector<int> out;
        int token = m_.config.vocab.bos_id;
        for (int pos = 0; pos < m_.config.max_target_len; ++pos) {
            const std::vector<T>& logits = step(token, pos);
            int arg = 0;
            for (size_t i = 1; i < logits.size(); ++i)
                if (logits[i] > logits[static_cast<size_t>(arg)]) arg = static_cast<int>(i);
            if (arg == m_.config.vocab.eos_id) break;
            out.push_back(arg);
            token = arg;
        }
        return out;
    }

    // Next-token logits after feeding `token` at position `pos`.
    const std::vector<T>& step(int token, int pos) {
        const int64_t dim = m_.config.model_dim;
        y_.resize(static_cast<size_t>(dim));
        for (int64_t i = 0; i < dim; ++i)
            y_[static_cast<size_t>(i)] = m_.tok_emb.value(token, i) + pe_(pos, i);
        for (int l = 0; l < m_.config.decoder_layers; ++l) {
            TransformerBlock<T>& b = m_.decoder[static_cast<size_t>(l)];
            // causal self-attention over cached positions <= pos
            detail::layer_norm_vec(y_, b.ln1_g, b.ln1_b, h_);
            detail::linear_vec(h_, b.self_attn.wq, b.self_attn.bq, q_);
            detail::linear_vec(h_, b.self_attn.wk, b.self_attn.bk, tmp_);
            std::copy(tmp_.begin(), tmp_.end(),
                      self_k_[static_cast<size_t>(l)].data.begin() + pos * dim);
            detail::linear_vec(h_, b.self_attn.wv, b.self_attn.bv, tmp_);
            std::copy(tmp_.begin(), tmp_.end(),
                      self_v_[static_cast<size_t>(l)].data.begin() + pos * dim);
            detail::attend_vec(q_, self_k_[static_cast<size_t>(l)], self_v_[static_cast<size_t>(l)],
                               pos + 1, m_.config.heads, ctx_, scores_);
            detail::linear_vec(ctx_, b.self_attn.wo, b.self_attn.bo, tmp_);
            for (int64_t i = 0; i < dim; ++i) y_[static_cast<size_t>(i)] += tmp_[static_cast<size_t>(i)];
            // cross-attention over the encoder output
            detail::layer_norm_vec(y_, b.lnc_g, b.lnc_b, h_);
            detail::linear_vec(h_, b.cross_attn.wq, b.cross_attn.bq, q_);
            detail::attend_vec(q_, cross_k_[static_cast<size_t>(l)], cross_v_[static_cast<size_t>(l)],
                               enc_out_.shape[0], m_.config.heads, ctx_, scores_);
            detail::linear_vec(ctx_, b.cross_attn.wo, b.cross_attn.bo, tmp_);
            for (int64_t i = 0; i < dim; ++i) y_[static_cast<size_t>(i)] += tmp_[static_cast<size_t>(i)];
            // feed-forward
            detail::layer_norm_vec(y_, b.ln2_g, b.ln2_b, h_);
            detail::linear_vec(h_, b.ff_w1, b.ff_b1, ff_);
            for (T& x : ff_) x = detail::gelu_scalar(x);
            detail::linear_vec(ff_, b.ff_w2, b.ff_b2, tmp_);
            for (int64_t i = 0; i < dim; ++i) y_[static_cast<size_t>(i)] += tmp_[static_cast<size_t>(i)];
        }
        detail::layer_norm_vec(y_, m_.dec_ln_g, m_.dec_ln_b, h_);
        detail::linear_vec(h_, m_.head_w, m_.head_b, logits_);
        return logits_;
    }

  private:
    Tensor<T> project(const Tensor<T>& x, const Parameter<T>& w, const Parameter<T>& b) {
        Tensor<T> out({x.shape[0], w.value.shape[1]});
        as_matrix(out).noalias() = as_matrix(x) * as_matrix(w.value);
        for (int64_t r = 0; r < out.shape[0]; ++r)
            for (int64_t c = 0; c < out.shape[1]; ++c) out(r, c) += b.value(c);
        return out;
    }

    Model<T>& m_;
    Tensor<T> enc_out_, pe_;
    std::vector<Tensor<T>> cross_k_, cross_v_, self_k_, self_v_;
    std::vector<T> y_, h_, q_, tmp_, ctx_, ff_, scores_, logits_;
};

template <typename T>
std::vector<int> encdec_greedy_ids(Model<T>& m, const Tensor<T>& features) {
    return EncDecGreedyDecoder<T>(m, features).run();
}

// Architecture-dispatched transcript for one utterance.
template <typename T>
std::string transcribe(Model<T>& m, const Tensor<T>& features) {
    const std::vector<int> ids = m.config.arch == Arch::EncCtc ? ctc_greedy_ids(m, features)
                                                               : encdec_greedy_ids(m, features);
    return m.config.vocab.decode(ids);
}

}  // namespace rlab
