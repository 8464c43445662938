#include "doctest.h"

#include <cmath>
#include <vector>

#include "rlab/optimizer.hpp"

using namespace rlab;

TEST_SUITE("optimizer") {

TEST_CASE("schedule: warmup to peak, linear decay to zero") {
    ScheduleConfig s{3e-4, 50, 1000};
    CHECK(lr_at(s, 50) == doctest::Approx(3e-4).epsilon(1e-12));
    CHECK(lr_at(s, 25) == doctest::Approx(1.5e-4).epsilon(1e-12));
    CHECK(lr_at(s, 0) == 0.0);
    CHECK(lr_at(s, 1000) == 0.0);

    // piecewise linear: constant increments on each side of the peak
    const double up = lr_at(s, 1) - lr_at(s, 0);
    for (int64_t t = 1; t <= 50; ++t)
        CHECK(lr_at(s, t) - lr_at(s, t - 1) == doctest::Approx(up).epsilon(1e-9));
    const double down = lr_at(s, 51) - lr_at(s, 50);
    for (int64_t t = 51; t <= 1000; ++t)
        CHECK(lr_at(s, t) - lr_at(s, t - 1) == doctest::Approx(down).epsilon(1e-9));
    // maximal exactly at the warmup boundary
    for (int64_t t = 0; t <= 1000; ++t) CHECK(lr_at(s, t) <= lr_at(s, 50));

    CHECK_THROWS_AS(lr_at(s, -1), ArgumentError);
    CHECK_THROWS_AS(lr_at(s, 1001), ArgumentError);
    CHECK_THROWS_AS(lr_at(ScheduleConfig{3e-4, 50, 50}, 10), ConfigError);
    CHECK_THROWS_AS(lr_at(ScheduleConfig{0.0, 50, 100}, 10), ConfigError);
}

TEST_CASE("first AdamW step on a unit scalar") {
    Parameter<double> w("w", Tensor<double>::scalar(1.0));
    w.gradient.data[0] = 1.0;
    w.has_grad = true;
    AdamW<double> opt({&w}, AdamWConfig{.weight_decay = 0.0});
    opt.step(0.1);
    // m_hat = 1, v_hat = 1 -> w = 1 - 0.1 / (1 + 1e-8)
    CHECK(w.value.data[0] == doctest::Approx(1.0 - 0.1 / (1.0 + 1e-8)).epsilon(1e-12));
    CHECK(w.gradient.data[0] == 0.0);  // gradients zeroed by the step
    CHECK_FALSE(w.has_grad);
}

TEST_CASE("zero gradient leaves the parameter unchanged") {
    Parameter<double> w("w", Tensor<double>::scalar(2.5));
    w.has_grad = true;
    AdamW<double> opt({&w}, AdamWConfig{.weight_decay = 0.0});
    opt.step(0.1);
    CHECK(w.value.data[0] == 2.5);
}

TEST_CASE("frozen parameters are never updated") {
    Parameter<double> frozen("frozen", Tensor<double>::scalar(1.0));
    frozen.trainable = false;
    frozen.gradient.data[0] = 123.0;
    Parameter<double> live("live", Tensor<double>::scalar(1.0));
    live.gradient.data[0] = 1.0;
    live.has_grad = true;
    AdamW<double> opt({&frozen, &live}, AdamWConfig{});
    opt.step(0.1);
    CHECK(frozen.value.data[0] == 1.0);
    CHECK(frozen.gradient.data[0] == 0.0);  // grads zeroed for frozen params too
    CHECK(live.value.data[0] < 1.0);
}

TEST_CASE("step without gradients is an error") {
    Parameter<double> w("w", Tensor<double>::scalar(1.0));
    AdamW<double> opt({&w}, AdamWConfig{});
    CHECK_THROWS_AS(opt.step(0.1), MissingGradientError);
}

TEST_CASE("five steps on a quadratic match an independent reference within 1e-10") {
    // loss = 0.5 * sum((w - target)^2); grad = w - target
    const std::vector<double> target = {0.3, -1.2, 2.0};
    const double lr = 0.05, wd = 0.01;

    Parameter<double> w("w", Tensor<double>::row({1.0, 1.0, 1.0}));
    AdamW<double> opt({&w}, AdamWConfig{.weight_decay = wd});

    // hand-coded AdamW, written independently of the implementation
    std::vector<double> ref = {1.0, 1.0, 1.0};
    std::vector<double> m(3, 0.0), v(3, 0.0);
    const double b1 = 0.9, b2 = 0.999, eps = 1e-8;

    for (int t = 1; t <= 5; ++t) {
        for (size_t i = 0; i < 3; ++i) {
            w.gradient.data[i] = w.value.data[i] - target[i];
        }
        w.has_grad = true;
        opt.step(lr);

        for (size_t i = 0; i < 3; ++i) {
            const double g = ref[i] - target[i];
            ref[i] -= lr * wd * ref[i];
            m[i] = b1 * m[i] + (1 - b1) * g;
            v[i] = b2 * v[i] + (1 - b2) * g * g;
            const double mh = m[i] / (1 - std::pow(b1, t));
            const double vh = v[i] / (1 - std::pow(b2, t));
            ref[i] -= lr * mh / (std::sqrt(vh) + eps);
        }
        for (size_t i = 0; i < 3; ++i) CHECK(std::abs(w.value.data[i] - ref[i]) < 1e-10);
    }
}

TEST_CASE("gradient clipping rescales the global norm") {
    Parameter<double> w("w", Tensor<double>::row({1.0, 1.0}));
    w.gradient.data = {30.0, 40.0};  // norm 50
    w.has_grad = true;
    AdamW<double> clipped({&w}, AdamWConfig{.weight_decay = 0.0, .clip_norm = 5.0});
    clipped.step(0.1);
    Parameter<double> w2("w2", Tensor<double>::row({1.0, 1.0}));
    w2.gradient.data = {3.0, 4.0};  // already norm 5
    w2.has_grad = true;
    AdamW<double> plain({&w2}, AdamWConfig{.weight_decay = 0.0, .clip_norm = 0.0});
    plain.step(0.1);
    CHECK(w.value.data[0] == doctest::Approx(w2.value.data[0]).epsilon(1e-12));
    CHECK(w.value.data[1] == doctest::Approx(w2.value.data[1]).epsilon(1e-12));
}

}  // TEST_SUITE
