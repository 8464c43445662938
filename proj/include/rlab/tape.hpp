#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "rlab/error.hpp"
#include "rlab/tensor.hpp"

namespace rlab {

template <typename T>
class Tape;

// Handle to a node on a tape. Cheap to copy; becomes invalid when the tape is
// reset or destroyed.
template <typename T>
struct Value {
    Tape<T>* tape = nullptr;
    int32_t id = -1;
    uint32_t epoch = 0;

    bool valid() const { return tape != nullptr && id >= 0; }
};

// Reverse-mode autodiff tape. Records executed primitives in order; creation
// order is a topological order, so backward walks nodes from the loss down to
// index 0. One forward pass per tape; a second backward without a new forward
// is an error.
template <typename T>
class Tape {
  public:
    using BackwardFn = std::function<void(Tape&, int32_t node)>;

    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    // Leaf holding a constant (non-parameter) tensor.
    Value<T> constant(Tensor<T> v) { return push(std::move(v), {}, nullptr); }

    // Leaf bound to a parameter. Repeated use of the same parameter returns
    // the same node, so gradients of shared weights accumulate naturally.
    Value<T> use(Parameter<T>& p) {
        auto it = param_ids_.find(&p);
        if (it != param_ids_.end()) return Value<T>{this, it->second, epoch_};
        Value<T> v = push(p.value, {}, nullptr);
        param_ids_.emplace(&p, v.id);
        params_.emplace_back(&p, v.id);
        return v;
    }

    Value<T> push(Tensor<T> out, std::vector<int32_t> inputs, BackwardFn fn) {
        if (backward_done_)
            throw TapeError("tape already ran backward; record a new forward pass first");
        nodes_.push_back(Node{std::move(out), std::move(inputs), std::move(fn)});
        return Value<T>{this, static_cast<int32_t>(nodes_.size() - 1), epoch_};
    }

    int32_t check(Value<T> v) const {
        if (v.tape != this) throw TapeError("value does not belong to this tape");
        if (v.epoch != epoch_ || v.id < 0 || v.id >= static_cast<int32_t>(nodes_.size()))
            throw TapeError("value refers to a dead tape generation");
        return v.id;
    }

    const Tensor<T>& value(Value<T> v) const { return nodes_[check(v)].value; }
    const Tensor<T>& value_at(int32_t id) const { return nodes_[id].value; }
    const std::vector<int32_t>& inputs_at(int32_t id) const { return nodes_[id].inputs; }

    Tensor<T>& grad_at(int32_t id) { return grads_[id]; }

    const Tensor<T>& grad(Value<T> v) const {
        int32_t id = check(v);
        if (!backward_done_) throw TapeError("gradients not available before backward");
        return grads_[id];
    }

    void backward(Value<T> loss) {
        int32_t root = check(loss);
        if (backward_done_) throw TapeError("second backward on the same tape");
        if (nodes_.empty()) throw TapeError("backward on an empty tape");
        if (nodes_[root].value.numel() != 1)
            throw TapeError("backward requires a scalar loss, got shape " +
                            nodes_[root].value.shape_string());
        grads_.clear();
        grads_.reserve(nodes_.size());
        for (const Node& n : nodes_) grads_.push_back(Tensor<T>::zeros(n.value.shape));
        grads_[root].data[0] = T(1);
        backward_done_ = true;
        for (int32_t i = root; i >= 0; --i) {
            if (nodes_[i].backward) nodes_[i].backward(*this, i);
        }
    }

    bool backward_done() const { return backward_done_; }

    // Parameter leaves in registration order with their accumulated gradients.
    std::vector<std::pair<Parameter<T>*, const Tensor<T>*>> param_grads() const {
        if (!backward_done_) throw TapeError("param_grads before backward");
        std::vector<std::pair<Parameter<T>*, const Tensor<T>*>> out;
        out.reserve(params_.size());
        for (const auto& [p, id] : params_) out.emplace_back(p, &grads_[id]);
        return out;
    }

    // Invalidates all outstanding values and clears the recording.
    void reset() {
        nodes_.clear();
        grads_.clear();
        params_.clear();
        param_ids_.clear();
        backward_done_ = false;
        ++epoch_;
    }

    size_t size() const { return nodes_.size(); }

  private:
    struct Node {
        Tensor<T> value;
        std::vector<int32_t> inputs;
        BackwardFn backward;
    };

    std::vector<Node> nodes_;
    std::vector<Tensor<T>> grads_;
    std::vector<std::pair<Parameter<T>*, int32_t>> params_;
    std::unordered_map<const Parameter<T>*, int32_t> param_ids_;
    bool backward_done_ = false;
    uint32_t epoch_ = 0;
};

}  // namespace rlab
