#include "rlab/checkpoint.hpp"

#include <json.hpp>

#include <cstring>
#include <fstream>

namespace rlab {

namespace {

constexpr uint32_t kCheckpointVersion = 1;

nlohmann::json vocab_to_json(const Vocab& v) {
    return nlohmann::json{{"symbols", v.symbols},
                          {"blank_id", v.blank_id},
                          {"bos_id", v.bos_id},
                          {"eos_id", v.eos_id}};
}

Vocab vocab_from_json(const nlohmann::json& j) {
    Vocab v;
    v.symbols = j.at("symbols").get<std::vector<std::string>>();
    v.blank_id = j.at("blank_id").get<int>();
    v.bos_id = j.at("bos_id").get<int>();
    v.eos_id = j.at("eos_id").get<int>();
    v.rebuild_index();
    return v;
}

nlohmann::json config_to_json(const ModelConfig& c) {
    return nlohmann::json{{"arch", arch_name(c.arch)},
                          {"encoder_layers", c.encoder_layers},
                          {"decoder_layers", c.decoder_layers},
                          {"model_dim", c.model_dim},
                          {"heads", c.heads},
                          {"ff_dim", c.ff_dim},
                          {"feature_dim", c.feature_dim},
                          {"dropout_p", static_cast<double>(c.dropout_p)},
                          {"max_target_len", c.max_target_len},
                          {"vocab", vocab_to_json(c.vocab)}};
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    const std::string arch = j.at("arch").get<std::string>();
    if (arch == "enc_ctc")
        c.arch = Arch::EncCtc;
    else if (arch == "enc_dec")
        c.arch = Arch::EncDec;
    else
        throw CheckpointError("unknown architecture '" + arch + "' in checkpoint");
    c.encoder_layers = j.at("encoder_layers").get<int>();
    c.decoder_layers = j.at("decoder_layers").get<int>();
    c.model_dim = j.at("model_dim").get<int>();
    c.heads = j.at("heads").get<int>();
    c.ff_dim = j.at("ff_dim").get<int>();
    c.feature_dim = j.at("feature_dim").get<int>();
    c.dropout_p = static_cast<float>(j.at("dropout_p").get<double>());
    c.max_target_len = j.at("max_target_len").get<int>();
    c.vocab = vocab_from_json(j.at("vocab"));
    return c;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model<float>& model,
                     const CheckpointExtra& extra) {
    nlohmann::json manifest;
    manifest["format_version"] = kCheckpointVersion;
    manifest["model"] = config_to_json(model.config);
    manifest["optimizer_steps"] = extra.optimizer_steps;
    manifest["schedule"] = nlohmann::json{{"peak_lr", extra.schedule.peak_lr},
                                          {"warmup_steps", extra.schedule.warmup_steps},
                                          {"total_steps", extra.schedule.total_steps}};
    manifest["seed"] = extra.seed;
    manifest["rng"] = nlohmann::json{{"key", extra.rng_key}, {"counter", extra.rng_counter}};

    nlohmann::json params = nlohmann::json::array();
    int64_t offset = 0;
    for (const Parameter<float>* p : model.parameters()) {
        params.push_back(nlohmann::json{{"name", p->name},
                                        {"shape", p->value.shape},
                                        {"offset", offset},
                                        {"trainable", p->trainable}});
        offset += p->value.numel();
    }
    manifest["params"] = std::move(params);

    const std::string text = manifest.dump();
    if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw CheckpointError("cannot write checkpoint " + path.string());
    os.write("RLCK", 4);
    const uint32_t version = kCheckpointVersion;
    os.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const uint64_t len = text.size();
    os.write(reinterpret_cast<const char*>(&len), sizeof(len));
    os.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const Parameter<float>* p : model.parameters())
        os.write(reinterpret_cast<const char*>(p->value.data.data()),
                 static_cast<std::streamsize>(p->value.data.size() * sizeof(float)));
    if (!os) throw CheckpointError("short write to checkpoint " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw CheckpointError("cannot open checkpoint " + path.string());
    char magic[4];
    is.read(magic, 4);
    if (!is || std::memcmp(magic, "RLCK", 4) != 0)
        throw CheckpointError("bad magic in checkpoint " + path.string());
    uint32_t version = 0;
    is.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != kCheckpointVersion)
        throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
    uint64_t len = 0;
    is.read(reinterpret_cast<char*>(&len), sizeof(len));
    std::string text(len, '\0');
    is.read(text.data(), static_cast<std::streamsize>(len));
    if (!is) throw CheckpointError("truncated checkpoint manifest in " + path.string());
    nlohmann::json manifest = nlohmann::json::parse(text, nullptr, false);
    if (manifest.is_discarded())
        throw CheckpointError("malformed checkpoint manifest in " + path.string());

    LoadedCheckpoint out;
    out.model = build_model<float>(config_from_json(manifest.at("model")), Rng::seeded(0));
    out.extra.optimizer_steps = manifest.at("optimizer_steps").get<int64_t>();
    out.extra.schedule.peak_lr = manifest.at("schedule").at("peak_lr").get<double>();
    out.extra.schedule.warmup_steps = manifest.at("schedule").at("warmup_steps").get<int64_t>();
    out.extra.schedule.total_steps = manifest.at("schedule").at("total_steps").get<int64_t>();
    out.extra.seed = manifest.at("seed").get<uint64_t>();
    out.extra.rng_key = manifest.at("rng").at("key").get<uint64_t>();
    out.extra.rng_counter = manifest.at("rng").at("counter").get<uint64_t>();

    const nlohmann::json& params = manifest.at("params");
    std::vector<Parameter<float>*> live = out.model.parameters();
    if (params.size() != live.size())
        throw CheckpointError("checkpoint parameter count mismatch in " + path.string());
    for (size_t i = 0; i < live.size(); ++i) {
        const nlohmann::json& rec = params[i];
        if (rec.at("name").get<std::string>() != live[i]->name)
            throw CheckpointError("checkpoint parameter order mismatch at '" + live[i]->name + "'");
        if (rec.at("shape").get<std::vector<int64_t>>() != live[i]->value.shape)
            throw CheckpointError("checkpoint shape mismatch for '" + live[i]->name + "'");
        live[i]->trainable = rec.at("trainable").get<bool>();
        is.read(reinterpret_cast<char*>(live[i]->value.data.data()),
                static_cast<std::streamsize>(live[i]->value.data.size() * sizeof(float)));
    }
    if (!is) throw CheckpointError("truncated parameter blob in " + path.string());
    return out;
}

}  // namespace rlab
