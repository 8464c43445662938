#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rlab/error.hpp"

namespace rlab {

inline int64_t numel_of(const std::vector<int64_t>& shape) {
    int64_t n = 1;
    for (int64_t d : shape) n *= d;
    return n;
}

inline std::string shape_str(const std::vector<int64_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < shape.size(); ++i) os << (i ? "x" : "") << shape[i];
    os << "]";
    return os.str();
}

// Dense row-major tensor. float for training, double for gradient checking.
template <typename T>
struct Tensor {
    std::vector<int64_t> shape;
    std::vector<T> data;

    Tensor() = default;

    explicit Tensor(std::vector<int64_t> s) : shape(std::move(s)), data() {
        check_shape(shape);
        data.assign(static_cast<size_t>(numel_of(shape)), T(0));
    }

    Tensor(std::vector<int64_t> s, std::vector<T> d) : shape(std::move(s)), data(std::move(d)) {
        check_shape(shape);
        if (numel_of(shape) != static_cast<int64_t>(data.size()))
            throw DimensionError("tensor data length " + std::to_string(data.size()) +
                                 " does not match shape " + shape_str(shape));
    }

    static Tensor zeros(std::vector<int64_t> s) { return Tensor(std::move(s)); }

    static Tensor full(std::vector<int64_t> s, T v) {
        Tensor t(std::move(s));
        for (T& x : t.data) x = v;
        return t;
    }

    static Tensor scalar(T v) { return Tensor({1}, {v}); }

    static Tensor row(std::vector<T> d) {
        int64_t n = static_cast<int64_t>(d.size());
        return Tensor({n}, std::move(d));
    }

    static Tensor matrix(int64_t r, int64_t c, std::vector<T> d) { return Tensor({r, c}, std::move(d)); }

    int64_t numel() const { return static_cast<int64_t>(data.size()); }
    int rank() const { return static_cast<int>(shape.size()); }

    int64_t rows() const {
        require_rank(2);
        return shape[0];
    }
    int64_t cols() const {
        require_rank(2);
        return shape[1];
    }

    T& operator()(int64_t i) { return data[static_cast<size_t>(i)]; }
    T operator()(int64_t i) const { return data[static_cast<size_t>(i)]; }
    T& operator()(int64_t r, int64_t c) { return data[static_cast<size_t>(r * shape[1] + c)]; }
    T operator()(int64_t r, int64_t c) const { return data[static_cast<size_t>(r * shape[1] + c)]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }

    bool all_finite() const {
        for (T x : data)
            if (!std::isfinite(static_cast<double>(x))) return false;
        return true;
    }

    std::string shape_string() const { return shape_str(shape); }

    void require_rank(int r) const {
        if (rank() != r)
            throw DimensionError("expected rank-" + std::to_string(r) + " tensor, got shape " +
                                 shape_str(shape));
    }

  private:
    static void check_shape(const std::vector<int64_t>& s) {
        for (int64_t d : s)
            if (d <= 0) throw DimensionError("non-positive dimension in shape " + shape_str(s));
    }
};

// Trainable (or frozen) weight: value plus a same-shaped gradient slot.
template <typename T>
struct Parameter {
    std::string name;
    Tensor<T> value;
    Tensor<T> gradient;
    bool trainable = true;
    bool has_grad = false;  // set when gradients are accumulated, cleared by zero_grad

    Parameter() = default;
    Parameter(std::string n, Tensor<T> v)
        : name(std::move(n)), value(std::move(v)), gradient(Tensor<T>::zeros(value.shape)) {}

    void zero_grad() {
        for (T& g : gradient.data) g = T(0);
        has_grad = false;
    }
};

}  // namespace rlab
