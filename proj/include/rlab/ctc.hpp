#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "rlab/ops.hpp"
#include "rlab/tape.hpp"

namespace rlab {

namespace detail {

template <typename T>
inline T log_add(T a, T b) {
    const T ninf = -std::numeric_limits<T>::infinity();
    if (a == ninf) return b;
    if (b == ninf) return a;
    return (a > b) ? a + std::log1p(std::exp(b - a)) : b + std::log1p(std::exp(a - b));
}

}  // namespace detail

// Frames needed to emit `target` under CTC: one per label plus a blank
// between adjacent repeats.
inline int64_t ctc_min_frames(const std::vector<int>& target) {
    int64_t need = static_cast<int64_t>(target.size());
    for (size_t i = 1; i < target.size(); ++i)
        if (target[i] == target[i - 1]) ++need;
    return need;
}

// Negative log-likelihood of `target` given per-frame logits, summed over all
// valid blank-augmented alignments via the log-space forward algorithm.
// Backward uses the forward/backward posterior: dL/dlogit = softmax - gamma.
template <typename T>
Value<T> ctc_loss(Value<T> logits, std::vector<int> target, int blank) {
    Tape<T>& tape = tape_of(logits);
    const Tensor<T>& lg = tape.value(logits);
    lg.require_rank(2);
    const int64_t frames = lg.shape[0], vocab = lg.shape[1];
    if (blank < 0 || blank >= vocab) throw ArgumentError("ctc blank id out of range");
    for (int u : target) {
        if (u == blank) throw ArgumentError("ctc target must not contain the blank symbol");
        if (u < 0 || u >= vocab) throw ArgumentError("ctc target id out of range");
    }
    if (ctc_min_frames(target) > frames)
        throw InfeasibleAlignmentError("target of length " + std::to_string(target.size()) +
                                       " needs " + std::to_string(ctc_min_frames(target)) +
                                       " frames but only " + std::to_string(frames) +
                                       " are available");

    const T ninf = -std::numeric_limits<T>::infinity();
    const int64_t U = static_cast<int64_t>(target.size());
    const int64_t S = 2 * U + 1;
    // Extended label sequence: blank, u1, blank, u2, ..., blank.
    std::vector<int> ext(static_cast<size_t>(S), blank);
    for (int64_t i = 0; i < U; ++i) ext[static_cast<size_t>(2 * i + 1)] = target[i];

    // Per-frame log-softmax.
    std::vector<T> lp(static_cast<size_t>(frames * vocab));
    for (int64_t t = 0; t < frames; ++t) {
        const T* x = lg.data.data() + t * vocab;
        T m = x[0];
        for (int64_t c = 1; c < vocab; ++c) m = std::max(m, x[c]);
        T sum = T(0);
        for (int64_t c = 0; c < vocab; ++c) sum += std::exp(x[c] - m);
        const T lse = m + std::log(sum);
        for (int64_t c = 0; c < vocab; ++c) lp[t * vocab + c] = x[c] - lse;
    }

    auto skip_ok = [&](int64_t s) { return ext[s] != blank && s >= 2 && ext[s] != ext[s - 2]; };

    std::vector<T> alpha(static_cast<size_t>(frames * S), ninf);
    alpha[0] = lp[0 * vocab + blank];
    if (S > 1) alpha[1] = lp[0 * vocab + ext[1]];
    for (int64_t t = 1; t < frames; ++t) {
        for (int64_t s = 0; s < S; ++s) {
            T best = alpha[(t - 1) * S + s];
            if (s >= 1) best = detail::log_add(best, alpha[(t - 1) * S + s - 1]);
            if (skip_ok(s)) best = detail::log_add(best, alpha[(t - 1) * S + s - 2]);
            alpha[t * S + s] = (best == ninf) ? ninf : best + lp[t * vocab + ext[s]];
        }
    }
    T log_p = alpha[(frames - 1) * S + S - 1];
    if (S > 1) log_p = detail::log_add(log_p, alpha[(frames - 1) * S + S - 2]);
    const T loss = -log_p;

    return tape.push(
        Tensor<T>::scalar(loss), {logits.id},
        [ext = std::move(ext), lp = std::move(lp), alpha = std::move(alpha), log_p, blank,
         S](Tape<T>& t, int32_t node) {
            const auto& ins = t.inputs_at(node);
            const T up = t.grad_at(node).data[0];
            Tensor<T>& gl = t.grad_at(ins[0]);
            const int64_t frames = gl.shape[0], vocab = gl.shape[1];
            const T ninf = -std::numeric_limits<T>::infinity();
            auto skip_ok = [&](int64_t s) {
                return ext[static_cast<size_t>(s)] != blank && s + 2 < S &&
                       ext[static_cast<size_t>(s)] != ext[static_cast<size_t>(s + 2)];
            };
            std::vector<T> beta(static_cast<size_t>(frames * S), ninf);
            beta[(frames - 1) * S + S - 1] = lp[(frames - 1) * vocab + ext[S - 1]];
            if (S > 1) beta[(frames - 1) * S + S - 2] = lp[(frames - 1) * vocab + ext[S - 2]];
            for (int64_t f = frames - 2; f >= 0; --f) {
                for (int64_t s = 0; s < S; ++s) {
                    T best = beta[(f + 1) * S + s];
                    if (s + 1 < S) best = detail::log_add(best, beta[(f + 1) * S + s + 1]);
                    if (skip_ok(s)) best = detail::log_add(best, beta[(f + 1) * S + s + 2]);
                    beta[f * S + s] = (best == ninf) ? ninf : best + lp[f * vocab + ext[s]];
                }
            }
            // gamma[t][k]: posterior label mass; dL/dlogit = softmax - gamma.
            std::vector<T> lab_sum(static_cast<size_t>(vocab));
            for (int64_t f = 0; f < frames; ++f) {
                std::fill(lab_sum.begin(), lab_sum.end(), ninf);
                for (int64_t s = 0; s < S; ++s) {
                    const T a = alpha[f * S + s], b = beta[f * S + s];
                    if (a == ninf || b == ninf) continue;
                    const int k = ext[static_cast<size_t>(s)];
                    lab_sum[k] = detail::log_add(lab_sum[k],
                                                 a + b - lp[f * vocab + k]);
                }
                for (int64_t k = 0; k < vocab; ++k) {
                    const T soft = std::exp(lp[f * vocab + k]);
                    const T gamma = (lab_sum[k] == ninf) ? T(0) : std::exp(lab_sum[k] - log_p);
                    gl(f, k) += up * (soft - gamma);
                }
            }
        });
}

// Per-frame argmax, collapse adjacent repeats, then delete blanks.
template <typename T>
std::vector<int> greedy_decode_ctc(const Tensor<T>& logits, int blank) {
    logits.require_rank(2);
    const int64_t frames = logits.shape[0], vocab = logits.shape[1];
    std::vector<int> out;
    int prev = -1;
    for (int64_t t = 0; t < frames; ++t) {
        const T* x = logits.data.data() + t * vocab;
        int arg = 0;
        for (int64_t c = 1; c < vocab; ++c)
            if (x[c] > x[arg]) arg = static_cast<int>(c);
        if (arg != prev && arg != blank) out.push_back(arg);
        prev = arg;
    }
    return out;
}

}  // namespace rlab
