#include "doctest.h"

#include <cmath>
#include <string>
#include <vector>

#include "gradcheck.hpp"
#include "rlab/decode.hpp"
#include "rlab/freeze.hpp"
#include "rlab/model.hpp"
#include "rlab/optimizer.hpp"

using namespace rlab;
using rlab::testing::random_tensor;

namespace {

ModelConfig tiny_ctc_config() {
    ModelConfig c;
    c.arch = Arch::EncCtc;
    c.encoder_layers = 2;
    c.decoder_layers = 0;
    c.model_dim = 16;
    c.heads = 2;
    c.ff_dim = 24;
    c.feature_dim = 6;
    c.dropout_p = 0.0f;
    c.vocab = Vocab::ctc("ab ");
    return c;
}

ModelConfig tiny_encdec_config() {
    ModelConfig c = tiny_ctc_config();
    c.arch = Arch::EncDec;
    c.decoder_layers = 2;
    c.max_target_len = 12;
    c.vocab = Vocab::enc_dec("ab ");
    return c;
}

// Finite-difference probe of dLoss/d(param coordinate) through a full model.
template <typename LossFn>
void probe_param(Model<double>& m, Parameter<double>& p, int64_t coord, LossFn&& forward_loss,
                 double h = 1e-5) {
    Tape<double> tape;
    tape.backward(forward_loss(tape));
    double analytic = 0.0;
    for (auto& [pp, g] : tape.param_grads())
        if (pp == &p) analytic = g->data[coord];
    const double orig = p.value.data[coord];
    p.value.data[coord] = orig + h;
    Tape<double> up_tape;
    const double up = up_tape.value(forward_loss(up_tape)).data[0];
    p.value.data[coord] = orig - h;
    Tape<double> down_tape;
    const double down = down_tape.value(forward_loss(down_tape)).data[0];
    p.value.data[coord] = orig;
    const double fd = (up - down) / (2.0 * h);
    CHECK(rlab::testing::rel_err(analytic, fd) < 1e-4);
}

}  // namespace

TEST_SUITE("models") {

TEST_CASE("ctc forward shapes and determinism") {
    Model<float> m = build_model<float>(tiny_ctc_config(), Rng::seeded(1));
    Rng rng = Rng::seeded(2);
    Tensor<float> one_frame({1, 6});
    for (float& v : one_frame.data) v = static_cast<float>(rng.next_normal());
    Tape<float> tape;
    const Tensor<float>& logits = tape.value(forward_ctc(m, tape, one_frame, false));
    CHECK(logits.shape == std::vector<int64_t>{1, m.config.vocab.size()});

    Tensor<float> feats({7, 6});
    for (float& v : feats.data) v = static_cast<float>(rng.next_normal());
    Tape<float> t1, t2;
    const Tensor<float>& a = t1.value(forward_ctc(m, t1, feats, false));
    const Tensor<float>& b = t2.value(forward_ctc(m, t2, feats, false));
    CHECK(a.data == b.data);

    // rows of softmax(logits) are normalized
    Tape<float> t3;
    const Tensor<float>& soft =
        t3.value(softmax_lastdim(forward_ctc(m, t3, feats, false)));
    for (int64_t r = 0; r < soft.shape[0]; ++r) {
        float s = 0;
        for (int64_t c = 0; c < soft.shape[1]; ++c) s += soft(r, c);
        CHECK(s == doctest::Approx(1.0f).epsilon(1e-6));
    }
}

TEST_CASE("architecture misuse raises usage errors") {
    Model<float> ctc = build_model<float>(tiny_ctc_config(), Rng::seeded(1));
    Model<float> encdec = build_model<float>(tiny_encdec_config(), Rng::seeded(1));
    Tensor<float> feats({3, 6});
    Tape<float> tape;
    CHECK_THROWS_AS(forward_encdec(ctc, tape, feats, {0}, false), ArgumentError);
    CHECK_THROWS_AS(forward_ctc(encdec, tape, feats, false), ArgumentError);
    // prefix must start with BOS
    CHECK_THROWS_AS(forward_encdec(encdec, tape, feats, {encdec.config.vocab.eos_id}, false),
                    ArgumentError);
    CHECK_THROWS_AS(forward_encdec(encdec, tape, feats, {}, false), ArgumentError);
}

TEST_CASE("encdec logits shape and causality") {
    Model<float> m = build_model<float>(tiny_encdec_config(), Rng::seeded(3));
    Rng rng = Rng::seeded(4);
    Tensor<float> feats({5, 6});
    for (float& v : feats.data) v = static_cast<float>(rng.next_normal());
    const Vocab& v = m.config.vocab;
    std::vector<int> prefix = {v.bos_id, v.id_of("a"), v.id_of("b"), v.id_of("a"), v.id_of(" ")};
    Tape<float> tape;
    const Tensor<float> base = tape.value(forward_encdec(m, tape, feats, prefix, false));
    CHECK(base.shape == std::vector<int64_t>{5, v.size()});

    // perturbing the token at position j leaves logits at positions < j bit-identical
    for (size_t j = 1; j < prefix.size(); ++j) {
        std::vector<int> perturbed = prefix;
        perturbed[j] = (prefix[j] == v.id_of("a")) ? v.id_of("b") : v.id_of("a");
        Tape<float> t2;
        const Tensor<float>& out = t2.value(forward_encdec(m, t2, feats, perturbed, false));
        bool prefix_equal = true, suffix_changed = false;
        for (int64_t r = 0; r < base.shape[0]; ++r)
            for (int64_t c = 0; c < base.shape[1]; ++c) {
                if (r < static_cast<int64_t>(j) && out(r, c) != base(r, c)) prefix_equal = false;
                if (r >= static_cast<int64_t>(j) && out(r, c) != base(r, c)) suffix_changed = true;
            }
        CHECK(prefix_equal);
        CHECK(suffix_changed);
    }
}

TEST_CASE("ctc architecture gradients match finite differences") {
    Rng seeds = Rng::seeded(50);
    for (int k = 0; k < 20; ++k) {
        Model<double> m = build_model<double>(tiny_ctc_config(), Rng::seeded(seeds.next_u64()));
        Rng rng = Rng::seeded(seeds.next_u64());
        Tensor<double> feats = random_tensor({6, 6}, rng);
        const std::vector<int> target = {1, 2};  // "ab"
        auto loss = [&](Tape<double>& t) {
            return ctc_loss(forward_ctc(m, t, feats, false), target, m.config.vocab.blank_id);
        };
        auto params = m.parameters();
        Parameter<double>& p = *params[static_cast<size_t>(seeds.next_below(params.size()))];
        probe_param(m, p, static_cast<int64_t>(seeds.next_below(static_cast<uint64_t>(p.value.numel()))),
                    loss);
    }
}

TEST_CASE("encdec architecture gradients match finite differences") {
    Rng seeds = Rng::seeded(60);
    for (int k = 0; k < 20; ++k) {
        Model<double> m = build_model<double>(tiny_encdec_config(), Rng::seeded(seeds.next_u64()));
        Rng rng = Rng::seeded(seeds.next_u64());
        Tensor<double> feats = random_tensor({5, 6}, rng);
        const Vocab& v = m.config.vocab;
        const std::vector<int> prefix = {v.bos_id, v.id_of("a"), v.id_of("b")};
        const std::vector<int> labels = {v.id_of("a"), v.id_of("b"), v.eos_id};
        auto loss = [&](Tape<double>& t) {
            return cross_entropy(forward_encdec(m, t, feats, prefix, false), labels);
        };
        auto params = m.parameters();
        Parameter<double>& p = *params[static_cast<size_t>(seeds.next_below(params.size()))];
        probe_param(m, p, static_cast<int64_t>(seeds.next_below(static_cast<uint64_t>(p.value.numel()))),
                    loss);
    }
}

TEST_CASE("incremental greedy decoder matches teacher-forced logits") {
    Rng seeds = Rng::seeded(70);
    for (int k = 0; k < 5; ++k) {
        Model<double> m = build_model<double>(tiny_encdec_config(), Rng::seeded(seeds.next_u64()));
        Rng rng = Rng::seeded(seeds.next_u64());
        Tensor<double> feats = random_tensor({4, 6}, rng);
        EncDecGreedyDecoder<double> dec(m, feats);
        std::vector<int> prefix = {m.config.vocab.bos_id};
        for (int pos = 0; pos < 6; ++pos) {
            const std::vector<double> inc = dec.step(prefix.back(), pos);
            Tape<double> tape;
            const Tensor<double>& full = tape.value(forward_encdec(m, tape, feats, prefix, false));
            const int64_t last = full.shape[0] - 1;
            for (int64_t c = 0; c < full.shape[1]; ++c)
                CHECK(inc[static_cast<size_t>(c)] == doctest::Approx(full(last, c)).epsilon(1e-9));
            int arg = 0;
            for (size_t i = 1; i < inc.size(); ++i)
                if (inc[i] > inc[static_cast<size_t>(arg)]) arg = static_cast<int>(i);
            prefix.push_back(arg);
        }
    }
}

TEST_CASE("head that always emits EOS decodes to the empty transcript") {
    Model<float> m = build_model<float>(tiny_encdec_config(), Rng::seeded(8));
    for (float& v : m.head_w.value.data) v = 0.0f;
    for (float& v : m.head_b.value.data) v = 0.0f;
    m.head_b.value(m.config.vocab.eos_id) = 10.0f;
    Tensor<float> feats({4, 6});
    CHECK(transcribe(m, feats) == "");
}

TEST_CASE("greedy decode is deterministic") {
    Model<float> m = build_model<float>(tiny_encdec_config(), Rng::seeded(9));
    Rng rng = Rng::seeded(10);
    Tensor<float> feats({6, 6});
    for (float& v : feats.data) v = static_cast<float>(rng.next_normal());
    CHECK(transcribe(m, feats) == transcribe(m, feats));
}

TEST_CASE("overfitting one utterance makes greedy decode reproduce its transcript") {
    ModelConfig cfg = tiny_encdec_config();
    Model<float> m = build_model<float>(cfg, Rng::seeded(11));
    apply_layer_config(m, full_trainable(cfg));
    Rng rng = Rng::seeded(12);
    Tensor<float> feats({10, 6});
    for (float& v : feats.data) v = static_cast<float>(rng.next_normal());
    const std::string transcript = "ab ba";
    std::vector<int> ids = cfg.vocab.encode(transcript);
    std::vector<int> prefix = {cfg.vocab.bos_id};
    prefix.insert(prefix.end(), ids.begin(), ids.end());
    std::vector<int> labels = ids;
    labels.push_back(cfg.vocab.eos_id);

    AdamW<float> opt(m.parameters(), AdamWConfig{.weight_decay = 0.0});
    for (int step = 0; step < 400; ++step) {
        Tape<float> tape;
        Value<float> loss = cross_entropy(forward_encdec(m, tape, feats, prefix, false), labels);
        tape.backward(loss);
        add_tape_grads(m, tape);
        opt.step(3e-3);
    }
    CHECK(transcribe(m, feats) == transcript);
}

TEST_CASE("trainable_param_count and block scaling") {
    ModelConfig cfg = tiny_ctc_config();
    cfg.encoder_layers = 8;
    Model<float> m = build_model<float>(cfg, Rng::seeded(13));

    LayerConfig none;
    none.head_trainable = false;
    apply_layer_config(m, none);
    CHECK(trainable_param_count(m) == 0);

    apply_layer_config(m, full_trainable(cfg));
    CHECK(trainable_param_count(m) == m.param_count());

    // first half of a homogeneous stack holds exactly half the block weights
    LayerConfig half, full_enc;
    for (int i = 0; i < 4; ++i) half.encoder_trainable.insert(i);
    for (int i = 0; i < 8; ++i) full_enc.encoder_trainable.insert(i);
    half.head_trainable = full_enc.head_trainable = false;
    half.input_projection_trainable = full_enc.input_projection_trainable = false;
    apply_layer_config(m, half);
    const int64_t half_count = trainable_param_count(m);
    apply_layer_config(m, full_enc);
    // exclude the final encoder layer norm, which rides with the last block
    const int64_t full_count = trainable_param_count(m) - m.enc_ln_g.value.numel() -
                               m.enc_ln_b.value.numel();
    CHECK(half_count * 2 == full_count);
}

}  // TEST_SUITE
