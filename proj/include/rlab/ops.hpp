#pragma once

#include <Eigen/Core>

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rlab/rng.hpp"
#include "rlab/tape.hpp"

// Differentiable primitives. Each op records one node on the tape of its
// inputs; backward functions accumulate (never overwrite) into input grads.

namespace rlab {

template <typename T>
using MatMap = Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;
template <typename T>
using ConstMatMap =
    Eigen::Map<const Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>;

template <typename T>
inline Tape<T>& tape_of(Value<T> v) {
    if (!v.valid()) throw TapeError("operation on an invalid value");
    return *v.tape;
}

template <typename T>
inline void require_same_tape(Value<T> a, Value<T> b) {
    if (a.tape != b.tape) throw TapeError("operands recorded on different tapes");
}

template <typename T>
inline ConstMatMap<T> as_matrix(const Tensor<T>& t) {
    t.require_rank(2);
    return ConstMatMap<T>(t.data.data(), t.shape[0], t.shape[1]);
}

template <typename T>
inline MatMap<T> as_matrix(Tensor<T>& t) {
    t.require_rank(2);
    return MatMap<T>(t.data.data(), t.shape[0], t.shape[1]);
}

// ---- matmul -----------------------------------------------------------

template <typename T>
Value<T> matmul(Value<T> a, Value<T> b) {
    Tape<T>& tape = tape_of(a);
    require_same_tape(a, b);
    const Tensor<T>& av = tape.value(a);
    const Tensor<T>& bv = tape.value(b);
    av.require_rank(2);
    bv.require_rank(2);
    if (av.shape[1] != bv.shape[0])
        throw DimensionError("matmul inner dimensions disagree: " + av.shape_string() + " * " +
                             bv.shape_string());
    Tensor<T> out({av.shape[0], bv.shape[1]});
    as_matrix(out).noalias() = as_matrix(av) * as_matrix(bv);
    return tape.push(std::move(out), {a.id, b.id},
                     [](Tape<T>& t, int32_t node) {
                         const auto& ins = t.inputs_at(node);
                         const Tensor<T>& g = t.grad_at(node);
                         const Tensor<T>& A = t.value_at(ins[0]);
                         const Tensor<T>& B = t.value_at(ins[1]);
                         as_matrix(t.grad_at(ins[0])).noalias() +=
                             as_matrix(g) * as_matrix(B).transpose();
                         as_matrix(t.grad_at(ins[1])).noalias() +=
                             as_matrix(A).transpose() * as_matrix(g);
                     });
}

template <typename T>
Value<T> transpose(Value<T> a) {
    Tape<T>& tape = tape_of(a);
    const Tensor<T>& av = tape.value(a);
    av.require_rank(2);
    Tensor<T> out({av.shape[1], av.shape[0]});
    as_matrix(out) = as_matrix(av).transpose();
    return tape.push(std::move(out), {a.id}, [](Tape<T>& t, int32_t node) {
        const auto& ins = t.inputs_at(node);
        as_matrix(t.grad_at(ins[0])) += as_matrix(t.grad_at(node)).transpose();
    });
}

// ---- elementwise ------------------------------------------------------

// add/mul accept equal shapes, or a rank-2 left operand with a rank-1 right
// operand of length cols(a) broadcast across rows (bias / gain vectors).
template <typename T>
inline bool row_broadcastable(const Tensor<T>& a, const Tensor<T>& b) {
    return a.rank() == 2 && b.rank() == 1 && b.shape[0] == a.shape[1];
}

template <typename T>
Value<T> add(Value<T> a, Value<T> b) {
    Tape<T>& tape = tape_of(a);
    require_same_tape(a, b);
    const Tensor<T>& av = tape.value(a);
    const Tensor<T>& bv = tape.value(b);
    Tensor<T> out(av.shape);
    if (av.same_shape(bv)) {
        for (int64_t i = 0; i < av.numel(); ++i) out.data[i] = av.data[i] + bv.data[i];
        return tape.push(std::move(out), {a.id, b.id}, [](Tape<T>& t, int32_t node) {
            const auto& ins = t.inputs_at(node);
            const Tensor<T>& g = t.grad_at(node);
            Tensor<T>& ga = t.grad_at(ins[0]);
            Tensor<T>& gb = t.grad_at(ins[1]);
            for (int64_t i = 0; i < g.numel(); ++i) {
                ga.data[i] += g.data[i];
                gb.data[i] += g.data[i];
            }
        });
    }
    if (row_broadcastable(av, bv)) {
        const int64_t rows = av.shape[0], cols = av.shape[1];
        for (int64_t r = 0; r < rows; ++r)
            for (int64_t c = 0; c < cols; ++c) out(r, c) = av(r, c) + bv(c);
        return tape.push(std::move(out), {a.id, b.id}, [](Tape<T>& t, int32_t node) {
            const auto& ins = t.inputs_at(node);
            const Tensor<T>& g = t.grad_at(node);
            Tensor<T>& ga = t.grad_at(ins[0]);
            Tensor<T>& gb = t.grad_at(ins[1]);
            const int64_t rows = g.shape[0], cols = g.shape[1];
            for (int64_t r = 0; r < rows; ++r)
                for (int64_t c = 0; c < cols; ++c) {
                    ga(r, c) += g(r, c);
                    gb(c) += g(r, c);
                }
        });
    }
    throw DimensionError("add shapes incompatible: " + av.shape_string() + " + " +
                         bv.shape_string());
}

template <typename T>
Value<T> mul(Value<T> a, Value<T> b) {
    Tape<T>& tape = tape_of(a);
    require_same_tape(a, b);
    const Tensor<T>& av = tape.value(a);
    const Tensor<T>& bv = tape.value(b);
    Tensor<T> out(av.shape);
    if (av.same_shape(bv)) {
        for (int64_t i = 0; i < av.numel(); ++i) out.data[i] = av.data[i] * bv.data[i];
        return tape.push(std::move(out), {a.id, b.id}, [](Tape<T>& t, int32_t node) {
            const auto& ins = t.inputs_at(node);
            const Tensor<T>& g = t.grad_at(node);
            const Tensor<T>& A = t.value_at(ins[0]);
            const Tensor<T>& B = t.value_at(ins[1]);
            Tensor<T>& ga = t.grad_at(ins[0]);
            Tensor<T>& gb = t.grad_at(ins[1]);
            for (int64_t i = 0; i < g.numel(); ++i) {
                ga.data[i] += g.data[i] * B.data[i];
                gb.data[i] += g.data[i] * A.data[i];
            }
        });
    }
    if (row_broadcastable(av, bv)) {
        const int64_t rows = av.shape[0], cols = av.shape[1];
        for (int64_t r = 0; r < rows; ++r)
            for (int64_t c = 0; c < cols; ++c) out(r, c) = av(r, c) * bv(c);
        return tape.push(std::move(out), {a.id, b.id}, [](Tape<T>& t, int32_t node) {
            const auto& ins = t.inputs_at(node);
            const Tensor<T>& g = t.grad_at(node);
            const Tensor<T>& A = t.value_at(ins[0]);
            const Tensor<T>& B = t.value_at(ins[1]);
            Tensor<T>& ga = t.grad_at(ins[0]);
            Tensor<T>& gb = t.grad_at(ins[1]);
            const int64_t rows = g.shape[0], cols = g.shape[1];
            for (int64_t r = 0; r < rows; ++r)
                for (int64_t c = 0; c < cols; ++c) {
                    ga(r, c) += g(r, c) * B(c);
                    gb(c) += g(r, c) * A(r, c);
                }
        });
    }
    throw DimensionError("mul shapes incompatible: " + av.shape_string() + " * " +
                         bv.shape_string());
}

template <typename T>
Value<T> scale(Value<T> a, double c) {
    Tape<T>& tape = tape_of(a);
    const Tensor<T>& av = tape.value(a);
    Tensor<T> out(av.shape);
    const T cc = static_cast<T>(c);
    for (int64_t i = 0; i < av.numel(); ++i) out.data[i] = av.data[i] * cc;
    return tape.push(std::move(out), {a.id}, [cc](Tape<T>& t, int32_t node) {
        const auto& ins = t.inputs_at(node);
        const Tensor<T>& g = t.grad_at(node);
        Tensor<T>& ga = t.grad_at(ins[0]);
        for (int64_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i] * cc;
    });
}

template <typename T>
Value<T> gelu(Value<T> a) {
    Tape<T>& tape = tape_of(a);
    const Tensor<T>& av = tape.value(a);
    Tensor<T> out(av.shape);
    for (int64_t i = 0; i < av.numel(); ++i) {
        const double x = static_cast<double>(av.data[i]);
        out.data[i] = static_cast<T>(0.5 * x * (1.0 + std::erf(x * 0.7071067811865475244)));
    }
    return tape.push(std::move(out), {a.id}, [](Tape<T>& t, int32_t node) {
        const auto& ins = t.inputs_at(node);
        const Tensor<T>& g = t.grad_at(node);
        const Tensor<T>& A = t.value_at(ins[0]);
        Tensor<T>& ga = t.grad_at(ins[0]);
        for (int64_t i = 0; i < g.numel(); ++i) {
            const double x = static_cast<double>(A.data[i]);
            const double cdf = 0.5 * (1.0 + std::erf(x * 0.7071067811865475244));
            const double pdf = std::exp(-0.5 * x * x) * 0.3989422804014326779;
            ga.data[i] += g.data[i] * static_cast<T>(cdf + x * pdf);
        }
    });
}

// ---- last-axis reductions ---------------------------------------------

template <typename T>
Value<T> softmax_lastdim(Value<T> a) {
    Tape<T>& tape = tape_of(a);
    const Tensor<T>& av = tape.value(a);
    if (av.rank() < 1) throw ArgumentError("softmax requires rank >= 1");
    const int64_t cols = av.shape.back();
    const int64_t rows = av.numel() / cols;
    Tensor<T> out(av.shape);
    for (int64_t r = 0; r < rows; ++r) {
        const T* x = av.data.data() + r * cols;
        T* y = out.data.data() + r * cols;
        T m = x[0];
        for (int64_t c = 1; c < cols; ++c) m = std::max(m, x[c]);
        T sum = T(0);
        for (int64_t c = 0; c < cols; ++c) {
            y[c] = std::exp(x[c] - m);
            sum += y[c];
        }
        const T inv = T(1) / sum;
        for (int64_t c = 0; c < cols; ++c) y[c] *= inv;
    }
    return tape.push(std::move(out), {a.id}, [](Tape<T>& t, int32_t node) {
        const auto& ins = t.inputs_at(node);
        const Tensor<T>& g = t.grad_at(node);
        const Tensor<T>& y = t.value_at(node);
        Tensor<T>& ga = t.grad_at(ins[0]);
        const int64_t cols = y.shape.back();
        const int64_t rows = y.numel() / cols;
        for (int64_t r = 0; r < rows; ++r) {
            const T* yr = y.data.data() + r * cols;
            const T* gr = g.data.data() + r * cols;
            T* gar = ga.data.data() + r * cols;
            T dot = T(0);
            for (int64_t c = 0; c < cols; ++c) dot += gr[c] * yr[c];
            for (int64_t c = 0; c < cols; ++c) gar[c] += yr[c] * (gr[c] - dot);
        }
    });
}

// Non-affine layer norm over the last axis; scale/shift are applied by the
// caller with mul/add so they stay ordinary parameters.
template <typename T>
Value<T> layer_norm_lastdim(Value<T> a, double eps) {
    Tape<T>& tape = tape_of(a);
    if (eps <= 0) throw ArgumentError("layer_norm eps must be positive");
    const Tensor<T>& av = tape.value(a);
    if (av.rank() < 1) throw ArgumentError("layer_norm requires rank >= 1");
    const int64_t cols = av.shape.back();
    const int64_t rows = av.numel() / cols;
    Tensor<T> out(av.shape);
    std::vector<T> inv_std(static_cast<size_t>(rows));
    for (int64_t r = 0; r < rows; ++r) {
        const T* x = av.data.data() + r * cols;
        T* y = out.data.data() + r * cols;
        T mean = T(0);
        for (int64_t c = 0; c < cols; ++c) mean += x[c];
        mean /= static_cast<T>(cols);
        T var = T(0);
        for (int64_t c = 0; c < cols; ++c) var += (x[c] - mean) * (x[c] - mean);
        var /= static_cast<T>(cols);
        const T inv = T(1) / std::sqrt(var + static_cast<T>(eps));
        inv_std[static_cast<size_t>(r)] = inv;
        for (int64_t c = 0; c < cols; ++c) y[c] = (x[c] - mean) * inv;
    }
    return tape.push(std::move(out), {a.id},
                     [inv_std = std::move(inv_std)](Tape<T>& t, int32_t node) {
                         const auto& ins = t.inputs_at(node);
                         const Tensor<T>& g = t.grad_at(node);
                         const Tensor<T>& y = t.value_at(node);  // normalized values
                         Tensor<T>& ga = t.grad_at(ins[0]);
                         const int64_t cols = y.shape.back();
                         const int64_t rows = y.numel() / cols;
                         for (int64_t r = 0; r < rows; ++r) {
                             const T* yr = y.data.data() + r * cols;
                             const T* gr = g.data.data() + r * cols;
                             T* gar = ga.data.data() + r * cols;
                             T mean_g = T(0), mean_gy = T(0);
                             for (int64_t c = 0; c < cols; ++c) {
                                 mean_g += gr[c];
                                 mean_gy += gr[c] * yr[c];
                             }
                             mean_g /= static_cast<T>(cols);
                             mean_gy /= static_cast<T>(cols);
                             const T inv = inv_std[static_cast<size_t>(r)];
                             for (int64_t c = 0; c < cols; ++c)
                                 gar[c] += inv * (gr[c] - mean_g - yr[c] * mean_gy);
                         }
                     });
}

// ---- gather / structure -----------------------------------------------

template <typename T>
Value<T> embedding_lookup(Value<T> table, std::vector<int> ids) {
    Tape<T>& tape = tape_of(table);
    const Tensor<T>& tv = tape.value(table);
    tv.require_rank(2);
    const int64_t vocab = tv.shape[0], dim = tv.shape[1];
    if (ids.empty()) throw ArgumentError("embedding_lookup with empty id list");
    for (int id : ids)
        if (id < 0 || id >= vocab)
            throw ArgumentError("embedding id " + std::to_string(id) + " out of range [0, " +
                                std::to_string(vocab) + ")");
    Tensor<T> out({static_cast<int64_t>(ids.size()), dim});
    for (size_t l = 0; l < ids.size(); ++l)
        for (int64_t c = 0; c < dim; ++c) out(static_cast<int64_t>(l), c) = tv(ids[l], c);
    return tape.push(std::move(out), {table.id},
                     [ids = std::move(ids)](Tape<T>& t, int32_t node) {
                         const auto& ins = t.inputs_at(node);
                         const Tensor<T>& g = t.grad_at(node);
                         Tensor<T>& gt = t.grad_at(ins[0]);
                         const int64_t dim = g.shape[1];
                         for (size_t l = 0; l < ids.size(); ++l)
                             for (int64_t c = 0; c < dim; ++c)
                                 gt(ids[l], c) += g(static_cast<int64_t>(l), c);
                     });
}

// Inverted dropout: kept activations scale by 1/(1-p) so eval is the identity.
template <typename T>
Value<T> dropout(Value<T> a, double p, bool training, Rng& rng) {
    if (p < 0.0 || p >= 1.0)
        throw ArgumentError("dropout probability must be in [0, 1), got " + std::to_string(p));
    if (!training || p == 0.0) return a;
    Tape<T>& tape = tape_of(a);
    const Tensor<T>& av = tape.value(a);
    const T keep_scale = static_cast<T>(1.0 / (1.0 - p));
    std::vector<T> mask(static_cast<size_t>(av.numel()));
    for (auto& m : mask) m = (rng.next_double() >= p) ? keep_scale : T(0);
    Tensor<T> out(av.shape);
    for (int64_t i = 0; i < av.numel(); ++i) out.data[i] = av.data[i] * mask[i];
    return tape.push(std::move(out), {a.id}, [mask = std::move(mask)](Tape<T>& t, int32_t node) {
        const auto& ins = t.inputs_at(node);
        const Tensor<T>& g = t.grad_at(node);
        Tensor<T>& ga = t.grad_at(ins[0]);
        for (int64_t i = 0; i < g.numel(); ++i) ga.data[i] += g.data[i] * mask[i];
    });
}

template <typename T>
Value<T> concat(const std::vector<Value<T>>& parts, int axis) {
    if (parts.empty()) throw ArgumentError("concat of zero tensors");
    if (axis != 0 && axis != 1) throw ArgumentError("concat axis must be 0 or 1");
    Tape<T>& tape = tape_of(parts[0]);
    std::vector<int32_t> ids;
    int64_t rows = 0, cols = 0;
    for (const Value<T>& v : parts) {
        require_same_tape(parts[0], v);
        const Tensor<T>& t = tape.value(v);
        t.require_rank(2);
        if (&v == &parts[0]) {
            rows = t.shape[0];
            cols = t.shape[1];
        } else if (axis == 0 && t.shape[1] != cols) {
            throw DimensionError("concat column mismatch: " + t.shape_string());
        } else if (axis == 1 && t.shape[0] != rows) {
            throw DimensionError("concat row mismatch: " + t.shape_string());
        }
        if (&v != &parts[0]) {
            if (axis == 0)
                rows += t.shape[0];
            else
                cols += t.shape[1];
        }
        ids.push_back(v.id);
    }
    Tensor<T> out({rows, cols});
    int64_t off = 0;
    for (int32_t id : ids) {
        const Tensor<T>& t = tape.value_at(id);
        if (axis == 0) {
            std::copy(t.data.begin(), t.data.end(), out.data.begin() + off * cols);
            off += t.shape[0];
        } else {
            for (int64_t r = 0; r < rows; ++r)
                std::copy(t.data.begin() + r * t.shape[1], t.data.begin() + (r + 1) * t.shape[1],
                          out.data.begin() + r * cols + off);
            off += t.shape[1];
        }
    }
    return tape.push(std::move(out), std::move(ids), [axis](Tape<T>& t, int32_t node) {
        const auto& ins = t.inputs_at(node);
        const Tensor<T>& g = t.grad_at(node);
        const int64_t cols = g.shape[1];
        int64_t off = 0;
        for (int32_t in : ins) {
            Tensor<T>& gi = t.grad_at(in);
            if (axis == 0) {
                for (int64_t i = 0; i < gi.numel(); ++i) gi.data[i] += g.data[off * cols + i];
                off += gi.shape[0];
            } else {
                const int64_t icols = gi.shape[1];
                for (int64_t r = 0; r < gi.shape[0]; ++r)
                    for (int64_t c = 0; c < icols; ++c) gi(r, c) += g(r, off + c);
                off += icols;
            }
        }
    });
}

template <typename T>
Value<T> slice(Value<T> a, int axis, int64_t start, int64_t len) {
    Tape<T>& tape = tape_of(a);
    const Tensor<T>& av = tape.value(a);
    av.require_rank(2);
    if (axis != 0 && axis != 1) throw ArgumentError("slice axis must be 0 or 1");
    if (start < 0 || len <= 0 || start + len > av.shape[axis])
        throw ArgumentError("slice [" + std::to_string(start) + ", " + std::to_string(start + len) +
                            ") out of range for shape " + av.shape_string());
    Tensor<T> out(axis == 0 ? std::vector<int64_t>{len, av.shape[1]}
                            : std::vector<int64_t>{av.shape[0], len});
    if (axis == 0) {
        std::copy(av.data.begin() + start * av.shape[1], av.data.begin() + (start + len) * av.shape[1],
                  out.data.begin());
    } else {
        for (int64_t r = 0; r < av.shape[0]; ++r)
            std::copy(av.data.begin() + r * av.shape[1] + start,
                      av.data.begin() + r * av.shape[1] + start + len, out.data.begin() + r * len);
    }
    return tape.push(std::move(out), {a.id}, [axis, start](Tape<T>& t, int32_t node) {
        const auto& ins = t.inputs_at(node);
        const Tensor<T>& g = t.grad_at(node);
        Tensor<T>& ga = t.grad_at(ins[0]);
        if (axis == 0) {
            const int64_t cols = g.shape[1];
            for (int64_t i = 0; i < g.numel(); ++i) ga.data[start * cols + i] += g.data[i];
        } else {
            for (int64_t r = 0; r < g.shape[0]; ++r)
                for (int64_t c = 0; c < g.shape[1]; ++c) ga(r, start + c) += g(r, c);
        }
    });
}

template <typename T>
Value<T> sum(Value<T> a) {
    Tape<T>& tape = tape_of(a);
    const Tensor<T>& av = tape.value(a);
    T s = T(0);
    for (T x : av.data) s += x;
    return tape.push(Tensor<T>::scalar(s), {a.id}, [](Tape<T>& t, int32_t node) {
        const auto& ins = t.inputs_at(node);
        const T g = t.grad_at(node).data[0];
        Tensor<T>& ga = t.grad_at(ins[0]);
        for (int64_t i = 0; i < ga.numel(); ++i) ga.data[i] += g;
    });
}

// Mean cross-entropy over rows of `logits` against integer targets, with
// optional label smoothing. Softmax is fused into the op.
template <typename T>
Value<T> cross_entropy(Value<T> logits, std::vector<int> targets, double label_smoothing = 0.0) {
    Tape<T>& tape = tape_of(logits);
    const Tensor<T>& lv = tape.value(logits);
    lv.require_rank(2);
    const int64_t rows = lv.shape[0], vocab = lv.shape[1];
    if (static_cast<int64_t>(targets.size()) != rows)
        throw DimensionError("cross_entropy: " + std::to_string(targets.size()) +
                             " targets for logits " + lv.shape_string());
    if (label_smoothing < 0.0 || label_smoothing >= 1.0)
        throw ArgumentError("label_smoothing must be in [0, 1)");
    for (int t : targets)
        if (t < 0 || t >= vocab) throw ArgumentError("cross_entropy target id out of range");
    const T ls = static_cast<T>(label_smoothing);
    const T on = T(1) - ls;
    const T off = ls / static_cast<T>(vocab);
    T loss = T(0);
    std::vector<T> probs(static_cast<size_t>(rows * vocab));
    for (int64_t r = 0; r < rows; ++r) {
        const T* x = lv.data.data() + r * vocab;
        T m = x[0];
        for (int64_t c = 1; c < vocab; ++c) m = std::max(m, x[c]);
        T sum_exp = T(0), sum_x = T(0);
        for (int64_t c = 0; c < vocab; ++c) {
            probs[r * vocab + c] = std::exp(x[c] - m);
            sum_exp += probs[r * vocab + c];
            sum_x += x[c];
        }
        const T lse = m + std::log(sum_exp);
        loss += lse - on * x[targets[r]] - off * sum_x;
        const T inv = T(1) / sum_exp;
        for (int64_t c = 0; c < vocab; ++c) probs[r * vocab + c] *= inv;
    }
    loss /= static_cast<T>(rows);
    return tape.push(Tensor<T>::scalar(loss), {logits.id},
                     [targets = std::move(targets), probs = std::move(probs), on,
                      off](Tape<T>& t, int32_t node) {
                         const auto& ins = t.inputs_at(node);
                         const T g = t.grad_at(node).data[0];
                         Tensor<T>& gl = t.grad_at(ins[0]);
                         const int64_t rows = gl.shape[0], vocab = gl.shape[1];
                         const T inv_rows = g / static_cast<T>(rows);
                         for (int64_t r = 0; r < rows; ++r) {
                             for (int64_t c = 0; c < vocab; ++c)
                                 gl(r, c) += inv_rows * (probs[r * vocab + c] - off);
                             gl(r, targets[r]) -= inv_rows * on;
                         }
                     });
}

// Additive causal mask: position i may attend to positions <= i.
template <typename T>
Tensor<T> causal_mask(int64_t n) {
    Tensor<T> m({n, n});
    for (int64_t i = 0; i < n; ++i)
        for (int64_t j = i + 1; j < n; ++j) m(i, j) = static_cast<T>(-1e30);
    return m;
}

}  // namespace rlab
