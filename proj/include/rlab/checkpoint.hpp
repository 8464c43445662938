#pragma once

#include <cstdint>
#include <filesystem>

#include "rlab/model.hpp"
#include "rlab/optimizer.hpp"

namespace rlab {

// Training-state fields carried in the checkpoint manifest alongside the
// model definition.
struct CheckpointExtra {
    int64_t optimizer_steps = 0;
    ScheduleConfig schedule;
    uint64_t seed = 0;
    uint64_t rng_key = 0;
    uint64_t rng_counter = 0;
};

// Single-file checkpoint: magic "RLCK", u32 format version, u64 manifest
// length, JSON manifest (model config, parameter names/shapes/offsets,
// trainable flags, schedule + RNG state), then one little-endian float32
// blob with all parameters in model order. save -> load -> save round-trips
// byte-identically.
void save_checkpoint(const std::filesystem::path& path, const Model<float>& model,
                     const CheckpointExtra& extra);

struct LoadedCheckpoint {
    Model<float> model;
    CheckpointExtra extra;
};

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace rlab
