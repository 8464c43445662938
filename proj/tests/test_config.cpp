#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "rlab/config_file.hpp"
#include "rlab/experiment.hpp"

using namespace rlab;

namespace {

std::filesystem::path write_config(const char* name, const std::string& text) {
    const auto dir = std::filesystem::temp_directory_path() / "rlab_tests" / "configs";
    std::filesystem::create_directories(dir);
    const auto path = dir / name;
    std::ofstream os(path);
    os << text;
    return path;
}

}  // namespace

TEST_SUITE("config") {

TEST_CASE("default configs serialize and parse back") {
    for (Arch arch : {Arch::EncCtc, Arch::EncDec}) {
        const ExperimentConfig cfg = ExperimentConfig::defaults(arch);
        const auto path = write_config(arch == Arch::EncCtc ? "ctc.conf" : "encdec.conf",
                                       to_config_text(cfg));
        const ExperimentConfig parsed = ExperimentConfig::from_file(path);
        CHECK(parsed.train.model.arch == cfg.train.model.arch);
        CHECK(parsed.train.model.encoder_layers == cfg.train.model.encoder_layers);
        CHECK(parsed.train.peak_lr == cfg.train.peak_lr);
        CHECK(parsed.data_S.speakers == cfg.data_S.speakers);
        CHECK(parsed.seeds == cfg.seeds);
    }
}

TEST_CASE("unknown fields are rejected with line diagnostics") {
    const auto path = write_config("unknown.conf",
                                   "schema_version = 1\n"
                                   "[model]\n"
                                   "arch = enc_ctc\n"
                                   "encoderlayers = 8\n");
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_file(path), doctest::Contains(":4:"), ConfigError);
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_file(path), doctest::Contains("encoderlayers"),
                         ConfigError);
}

TEST_CASE("type errors carry the line and field name") {
    const auto path = write_config("badvalue.conf",
                                   "schema_version = 1\n"
                                   "[train]\n"
                                   "epochs = five\n");
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_file(path), doctest::Contains("epochs"),
                         ConfigError);
}

TEST_CASE("missing schema version is rejected") {
    const auto path = write_config("noschema.conf", "[model]\narch = enc_ctc\n");
    CHECK_THROWS_AS(ExperimentConfig::from_file(path), ConfigError);
}

TEST_CASE("duplicate keys are rejected") {
    const auto path = write_config("dup.conf",
                                   "schema_version = 1\n"
                                   "[train]\n"
                                   "epochs = 5\n"
                                   "epochs = 6\n");
    CHECK_THROWS_AS(ExperimentConfig::from_file(path), ConfigError);
}

TEST_CASE("empty seed list fails validation") {
    const auto path = write_config("noseeds.conf",
                                   "schema_version = 1\n"
                                   "[grid]\n"
                                   "seeds = \n");
    CHECK_THROWS_WITH_AS(ExperimentConfig::from_file(path), doctest::Contains("seeds"),
                         ConfigError);
}

TEST_CASE("unknown preset names fail validation at parse time") {
    const auto path = write_config("badpreset.conf",
                                   "schema_version = 1\n"
                                   "[grid]\n"
                                   "layer_configs = first99\n");
    CHECK_THROWS_AS(ExperimentConfig::from_file(path), ConfigError);
}

TEST_CASE("layer choice parsing and labels") {
    const LayerChoice plain = LayerChoice::parse("last6");
    CHECK(plain.name == "last6");
    CHECK(plain.scope == PresetScope::Both);
    CHECK(plain.label() == "last6");

    const LayerChoice dec = LayerChoice::parse("last6:decoder-only");
    CHECK(dec.scope == PresetScope::DecoderOnly);
    CHECK(dec.label() == "last6-dec");

    const LayerChoice enc = LayerChoice::parse("f2-i2-l2:enc");
    CHECK(enc.scope == PresetScope::EncoderOnly);
    CHECK(enc.label() == "f2-i2-l2-enc");

    CHECK_THROWS_AS(LayerChoice::parse("last6:sideways"), ConfigError);
}

TEST_CASE("run ids round-trip through the report parser") {
    const std::string id =
        run_id_for(Arch::EncDec, LayerChoice{"last6", PresetScope::Both}, 0.1, 2);
    CHECK(id == "enc_dec_last6_er10_seed2");
    RunIdParts parts;
    REQUIRE(parse_run_id(id, parts));
    CHECK(parts.model == "enc_dec");
    CHECK(parts.layer_config == "last6");
    CHECK(parts.er_pct == 10.0);
    CHECK(parts.seed == 2);

    RunIdParts scoped;
    REQUIRE(parse_run_id(
        run_id_for(Arch::EncCtc, LayerChoice{"f4-i4-l4", PresetScope::Both}, 0.0, 7), scoped));
    CHECK(scoped.layer_config == "f4-i4-l4");
    CHECK(scoped.er_pct == 0.0);

    RunIdParts none;
    CHECK_FALSE(parse_run_id("enc_ctc_pretrain", none));
}

TEST_CASE("median") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0}) == 2.5);
    CHECK(median({5.0}) == 5.0);
    CHECK_THROWS_AS(median({}), ArgumentError);
}

}  // TEST_SUITE
