#include "doctest.h"

#include <cmath>
#include <vector>

#include "gradcheck.hpp"
#include "rlab/ctc.hpp"

using namespace rlab;
using rlab::testing::random_tensor;

namespace {

// Exhaustive alignment-sum oracle: enumerate every length-T path over the
// vocabulary, keep those that collapse (merge repeats, drop blanks) to the
// target, and sum their probabilities.
double ctc_brute_force(const Tensor<double>& logits, const std::vector<int>& target, int blank) {
    const int64_t frames = logits.shape[0], vocab = logits.shape[1];
    Tensor<double> probs(logits.shape);
    for (int64_t t = 0; t < frames; ++t) {
        double m = logits(t, 0);
        for (int64_t c = 1; c < vocab; ++c) m = std::max(m, logits(t, c));
        double sum = 0;
        for (int64_t c = 0; c < vocab; ++c) sum += std::exp(logits(t, c) - m);
        for (int64_t c = 0; c < vocab; ++c) probs(t, c) = std::exp(logits(t, c) - m) / sum;
    }
    std::vector<int> path(static_cast<size_t>(frames), 0);
    double total = 0.0;
    while (true) {
        std::vector<int> collapsed;
        int prev = -1;
        for (int p : path) {
            if (p != prev && p != blank) collapsed.push_back(p);
            prev = p;
        }
        if (collapsed == target) {
            double prob = 1.0;
            for (int64_t t = 0; t < frames; ++t) prob *= probs(t, path[static_cast<size_t>(t)]);
            total += prob;
        }
        int64_t i = frames - 1;
        while (i >= 0 && path[static_cast<size_t>(i)] == vocab - 1) path[static_cast<size_t>(i--)] = 0;
        if (i < 0) break;
        ++path[static_cast<size_t>(i)];
    }
    return -std::log(total);
}

double ctc_loss_value(const Tensor<double>& logits, const std::vector<int>& target, int blank) {
    Tape<double> tape;
    return tape.value(ctc_loss(tape.constant(logits), target, blank)).data[0];
}

}  // namespace

TEST_SUITE("ctc") {

TEST_CASE("single frame, empty target") {
    Rng rng = Rng::seeded(1);
    Tensor<double> logits = random_tensor({1, 3}, rng);
    double m = std::max({logits(0, 0), logits(0, 1), logits(0, 2)});
    double denom = 0;
    for (int c = 0; c < 3; ++c) denom += std::exp(logits(0, c) - m);
    const double p_blank = std::exp(logits(0, 0) - m) / denom;
    CHECK(ctc_loss_value(logits, {}, 0) == doctest::Approx(-std::log(p_blank)).epsilon(1e-9));
}

TEST_CASE("two frames, one label: three alignments") {
    Rng rng = Rng::seeded(2);
    Tensor<double> logits = random_tensor({2, 3}, rng);
    auto p = [&](int t, int c) {
        double m = std::max({logits(t, 0), logits(t, 1), logits(t, 2)});
        double denom = 0;
        for (int k = 0; k < 3; ++k) denom += std::exp(logits(t, k) - m);
        return std::exp(logits(t, c) - m) / denom;
    };
    // target "a" (id 1): a·blank + blank·a + a·a
    const double expected = -std::log(p(0, 1) * p(1, 0) + p(0, 0) * p(1, 1) + p(0, 1) * p(1, 1));
    CHECK(ctc_loss_value(logits, {1}, 0) == doctest::Approx(expected).epsilon(1e-9));
}

TEST_CASE("four uniform frames, target ab, matches path enumeration") {
    Tensor<double> logits({4, 3});  // all-zero logits = uniform distribution
    const std::vector<int> target = {1, 2};
    CHECK(ctc_loss_value(logits, target, 0) ==
          doctest::Approx(ctc_brute_force(logits, target, 0)).epsilon(1e-5));
}

TEST_CASE("matches brute force on every small instance") {
    Rng rng = Rng::seeded(3);
    for (int vocab = 2; vocab <= 4; ++vocab) {
        // all targets over labels {1..vocab-1} of length 0..3
        std::vector<std::vector<int>> targets = {{}};
        for (int len = 1; len <= 3; ++len) {
            size_t start = 0;
            std::vector<std::vector<int>> next;
            for (const auto& t : targets)
                if (static_cast<int>(t.size()) == len - 1)
                    for (int c = 1; c < vocab; ++c) {
                        auto ext = t;
                        ext.push_back(c);
                        next.push_back(ext);
                    }
            (void)start;
            targets.insert(targets.end(), next.begin(), next.end());
        }
        for (int frames = 1; frames <= 6; ++frames) {
            for (const auto& target : targets) {
                Tensor<double> logits = random_tensor({frames, vocab}, rng);
                if (ctc_min_frames(target) > frames) {
                    Tape<double> tape;
                    CHECK_THROWS_AS(ctc_loss(tape.constant(logits), target, 0),
                                    InfeasibleAlignmentError);
                    continue;
                }
                CHECK(ctc_loss_value(logits, target, 0) ==
                      doctest::Approx(ctc_brute_force(logits, target, 0)).epsilon(1e-5));
            }
        }
    }
}

TEST_CASE("gradient matches finite differences") {
    Rng rng = Rng::seeded(4);
    const std::vector<std::vector<int>> targets = {{1}, {1, 2}, {2, 2}, {1, 2, 1}, {}};
    for (int k = 0; k < 20; ++k) {
        Tensor<double> logits = random_tensor({5, 4}, rng);
        const auto& target = targets[static_cast<size_t>(k) % targets.size()];
        CHECK(rlab::testing::check_input_grad(logits, [&](Tape<double>& t, Value<double> v) {
                  return ctc_loss(v, target, 0);
              }) < 1e-4);
    }
}

TEST_CASE("infeasible targets and blank-containing targets are rejected") {
    Tape<double> tape;
    Tensor<double> logits({2, 3});
    CHECK_THROWS_AS(ctc_loss(tape.constant(logits), {1, 2, 1}, 0), InfeasibleAlignmentError);
    CHECK_THROWS_AS(ctc_loss(tape.constant(logits), {1, 1}, 0), InfeasibleAlignmentError);
    CHECK_THROWS_AS(ctc_loss(tape.constant(logits), {0, 1}, 0), ArgumentError);
    CHECK_THROWS_AS(ctc_loss(tape.constant(logits), {7}, 0), ArgumentError);
}

TEST_CASE("greedy decode collapses repeats and removes blanks") {
    auto logits_for = [](const std::vector<int>& frame_argmax, int vocab) {
        Tensor<double> t({static_cast<int64_t>(frame_argmax.size()), vocab});
        for (size_t f = 0; f < frame_argmax.size(); ++f) t(static_cast<int64_t>(f), frame_argmax[f]) = 5.0;
        return t;
    };
    CHECK(greedy_decode_ctc(logits_for({1, 1, 0, 2}, 3), 0) == std::vector<int>{1, 2});
    CHECK(greedy_decode_ctc(logits_for({0, 0, 0}, 3), 0) == std::vector<int>{});
    CHECK(greedy_decode_ctc(logits_for({1, 0, 1}, 3), 0) == std::vector<int>{1, 1});
}

}  // TEST_SUITE
