#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "rlab/tensor.hpp"

namespace rlab {

// Linear warmup from zero to peak_lr over warmup_steps, then linear decay to
// zero at total_steps.
struct ScheduleConfig {
    double peak_lr = 3e-4;
    int64_t warmup_steps = 50;
    int64_t total_steps = 0;

    void validate() const {
        if (peak_lr <= 0) throw ConfigError("peak_lr must be positive");
        if (warmup_steps <= 0 || warmup_steps >= total_steps)
            throw ConfigError("need 0 < warmup_steps < total_steps, got warmup=" +
                              std::to_string(warmup_steps) + " total=" +
                              std::to_string(total_steps));
    }
};

inline double lr_at(const ScheduleConfig& s, int64_t step) {
    s.validate();
    if (step < 0 || step > s.total_steps)
        throw ArgumentError("schedule step " + std::to_string(step) + " outside [0, " +
                            std::to_string(s.total_steps) + "]");
    if (step <= s.warmup_steps)
        return s.peak_lr * static_cast<double>(step) / static_cast<double>(s.warmup_steps);
    return s.peak_lr * static_cast<double>(s.total_steps - step) /
           static_cast<double>(s.total_steps - s.warmup_steps);
}

struct AdamWConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double weight_decay = 0.01;
    double clip_norm = 0.0;  // 0 disables clipping
};

// AdamW with decoupled weight decay (applied before the adaptive update).
// Moment state is allocated only for trainable parameters; step() zeroes the
// gradients of every parameter it was given, frozen ones included.
template <typename T>
class AdamW {
  public:
    explicit AdamW(std::vector<Parameter<T>*> params, AdamWConfig cfg = {})
        : cfg_(cfg), all_params_(std::move(params)) {
        for (Parameter<T>* p : all_params_) {
            if (!p->trainable) continue;
            slots_.push_back(Slot{p, Tensor<T>::zeros(p->value.shape),
                                  Tensor<T>::zeros(p->value.shape)});
        }
    }

    void step(double lr) {
        for (const Slot& s : slots_)
            if (!s.p->has_grad)
                throw MissingGradientError("no gradient for parameter '" + s.p->name +
                                           "'; run backward before step");
        ++t_;
        double clip_scale = 1.0;
        if (cfg_.clip_norm > 0.0) {
            double sq = 0.0;
            for (const Slot& s : slots_)
                for (T g : s.p->gradient.data) sq += static_cast<double>(g) * static_cast<double>(g);
            const double norm = std::sqrt(sq);
            if (norm > cfg_.clip_norm) clip_scale = cfg_.clip_norm / norm;
        }
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (Slot& s : slots_) {
            T* w = s.p->value.data.data();
            const T* g = s.p->gradient.data.data();
            T* m = s.m.data.data();
            T* v = s.v.data.data();
            const int64_t n = s.p->value.numel();
            for (int64_t i = 0; i < n; ++i) {
                const double gi = static_cast<double>(g[i]) * clip_scale;
                double wi = static_cast<double>(w[i]);
                wi -= lr * cfg_.weight_decay * wi;
                const double mi = cfg_.beta1 * static_cast<double>(m[i]) + (1.0 - cfg_.beta1) * gi;
                const double vi = cfg_.beta2 * static_cast<double>(v[i]) + (1.0 - cfg_.beta2) * gi * gi;
                m[i] = static_cast<T>(mi);
                v[i] = static_cast<T>(vi);
                wi -= lr * (mi / bc1) / (std::sqrt(vi / bc2) + cfg_.eps);
                w[i] = static_cast<T>(wi);
            }
        }
        for (Parameter<T>* p : all_params_) p->zero_grad();
    }

    int64_t steps_done() const { return t_; }

    // Number of scalars with optimizer state; proportional to trainable size.
    int64_t state_param_count() const {
        int64_t n = 0;
        for (const Slot& s : slots_) n += s.p->value.numel();
        return n;
    }

    void set_steps_done(int64_t t) { t_ = t; }

  private:
    struct Slot {
        Parameter<T>* p;
        Tensor<T> m, v;
    };

    AdamWConfig cfg_;
    std::vector<Parameter<T>*> all_params_;
    std::vector<Slot> slots_;
    int64_t t_ = 0;
};

}  // namespace rlab
