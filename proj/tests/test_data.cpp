#include "doctest.h"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <set>

#include "rlab/data.hpp"
#include "rlab/text.hpp"

using namespace rlab;

namespace {

std::filesystem::path temp_dir(const char* name) {
    const auto dir = std::filesystem::temp_directory_path() / "rlab_tests" / name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

DomainSpec small_G() {
    DomainSpec g = default_domain_G();
    g.utterances = 200;
    g.speakers = 10;
    return g;
}

}  // namespace

TEST_SUITE("data") {

TEST_CASE("generation is deterministic") {
    const DomainSpec g = small_G();
    const auto a = generate_domain(g, Split::Dev);
    const auto b = generate_domain(g, Split::Dev);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].id == b[i].id);
        CHECK(a[i].transcript == b[i].transcript);
        CHECK(a[i].speaker == b[i].speaker);
        CHECK(a[i].features.data == b[i].features.data);
    }
}

TEST_CASE("default S domain has 30 speakers x 52 sentences") {
    const DomainSpec s = default_domain_S();
    CHECK(s.templates.size() == 52);
    const DomainData all = generate_all_splits(s);
    CHECK(all.train.size() + all.dev.size() + all.test.size() == 1560);
    CHECK(all.train.size() == 1404);  // 27 speakers
    CHECK(all.dev.size() == 52);      // 1 speaker
    CHECK(all.test.size() == 104);    // 2 speakers

    // speaker-disjoint splits
    std::set<int> train_speakers, dev_speakers, test_speakers;
    for (const auto& u : all.train) train_speakers.insert(u.speaker);
    for (const auto& u : all.dev) dev_speakers.insert(u.speaker);
    for (const auto& u : all.test) test_speakers.insert(u.speaker);
    for (int sp : dev_speakers) CHECK(train_speakers.count(sp) == 0);
    for (int sp : test_speakers) {
        CHECK(train_speakers.count(sp) == 0);
        CHECK(dev_speakers.count(sp) == 0);
    }
}

TEST_CASE("G splits follow the configured fractions") {
    const DomainSpec g = default_domain_G();
    CHECK(generate_domain(g, Split::Train).size() == 20000);
    CHECK(generate_domain(g, Split::Dev).size() == 2500);
    CHECK(generate_domain(g, Split::Test).size() == 2500);
}

TEST_CASE("utterance invariants: frames cover the transcript, features finite") {
    for (const Utterance& u : generate_domain(small_G(), Split::Test)) {
        CHECK(!u.transcript.empty());
        CHECK(u.features.shape[0] >=
              static_cast<int64_t>(utf8_decode(u.transcript).size()));
        CHECK(u.features.all_finite());
    }
}

TEST_CASE("every generated transcript is encodable with the shared vocabulary") {
    const Vocab vocab = Vocab::ctc(kGermanChars);
    for (const Utterance& u : generate_domain(small_G(), Split::Dev))
        CHECK_NOTHROW(vocab.encode(u.transcript));
    DomainSpec s = default_domain_S();
    s.deviation_prob = 1.0;
    for (const Utterance& u : generate_domain(s, Split::Dev))
        CHECK_NOTHROW(vocab.encode(u.transcript));
}

TEST_CASE("degenerate generator: same sentence, same speaker, no noise => identical features") {
    DomainSpec d = default_domain_G();
    d.words = {"nur", "eins"};
    d.words_min = d.words_max = 2;
    d.speakers = 1;
    d.utterances = 40;
    d.noise_scale = 0.0;
    const auto data = generate_domain(d, Split::Train);
    // with a tiny vocabulary several utterances share a transcript
    bool compared = false;
    for (size_t i = 1; i < data.size(); ++i) {
        for (size_t j = 0; j < i; ++j) {
            if (data[i].transcript == data[j].transcript) {
                CHECK(data[i].features.data == data[j].features.data);
                compared = true;
            }
        }
    }
    CHECK(compared);
}

TEST_CASE("speaker deviations") {
    const std::string tmpl = "schalte das licht an";

    Rng rng = Rng::seeded(1);
    CHECK(apply_speaker_deviation(tmpl, rng, 0.0) == tmpl);

    // delete is suppressed on one-word templates: never emit an empty transcript
    for (int i = 0; i < 200; ++i) {
        Rng r = Rng::seeded(1000 + static_cast<uint64_t>(i));
        CHECK(!apply_speaker_deviation("hilfe", r, 1.0).empty());
    }

    // deviation rate 0.5 over 1000 templates lands in the binomial band
    int deviated = 0;
    for (int i = 0; i < 1000; ++i) {
        Rng r = Rng::seeded(2000 + static_cast<uint64_t>(i));
        if (apply_speaker_deviation(tmpl, r, 0.5) != tmpl) ++deviated;
    }
    CHECK(deviated >= 440);
    CHECK(deviated <= 560);
}

TEST_CASE("invalid domain specs are rejected") {
    DomainSpec empty;
    empty.words.clear();
    empty.templates.clear();
    CHECK_THROWS_AS(empty.validate(), ConfigError);

    DomainSpec bad_split = small_G();
    bad_split.split.train = 0.9;  // sums to 1.1
    CHECK_THROWS_AS(bad_split.validate(), ConfigError);
}

TEST_CASE("manifest and feature files round-trip") {
    const auto dir = temp_dir("dataset_io");
    DomainSpec g = small_G();
    g.utterances = 12;
    const auto data = generate_domain(g, Split::Train);
    export_dataset(dir, data);

    const auto loaded = import_dataset(dir / "manifest.jsonl");
    REQUIRE(loaded.size() == data.size());
    for (size_t i = 0; i < data.size(); ++i) {
        CHECK(loaded[i].id == data[i].id);
        CHECK(loaded[i].speaker == data[i].speaker);
        CHECK(loaded[i].domain == data[i].domain);
        CHECK(loaded[i].transcript == data[i].transcript);
        CHECK(loaded[i].features.data == data[i].features.data);
    }
}

TEST_CASE("feature file byte layout") {
    const auto dir = temp_dir("feature_layout");
    Tensor<float> feats({2, 3}, {1.0f, 2.0f, 3.0f, 4.0f, 5.0f, 6.0f});
    write_feature_file(dir / "x.rlabf", feats);

    std::ifstream is(dir / "x.rlabf", std::ios::binary);
    std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(is)),
                                     std::istreambuf_iterator<char>());
    REQUIRE(bytes.size() == 4 + 4 + 4 + 4 + 6 * 4);
    CHECK(bytes[0] == 'R');
    CHECK(bytes[1] == 'L');
    CHECK(bytes[2] == 'A');
    CHECK(bytes[3] == 'B');
    CHECK(bytes[4] == 1);  // version, little-endian u32
    CHECK(bytes[8] == 2);  // T
    CHECK(bytes[12] == 3); // F
    float first;
    std::memcpy(&first, bytes.data() + 16, 4);
    CHECK(first == 1.0f);

    CHECK(read_feature_file(dir / "x.rlabf").data == feats.data);
    std::ofstream(dir / "bad.rlabf", std::ios::binary) << "BARF0000";
    CHECK_THROWS_AS(read_feature_file(dir / "bad.rlabf"), IoError);
}

}  // TEST_SUITE
