#pragma once

#include <cstdint>
#include <limits>
#include <ostream>
#include <vector>

#include "rlab/error.hpp"
#include "rlab/rng.hpp"

namespace rlab {

// Experience Replay policy: mix a fraction of original-domain data into
// new-domain fine-tuning, spread across all batches. The ratio is read
// relative to the new-domain training set size. By default a fresh replay
// subset is drawn every epoch; fixed_buffer reuses the first epoch's subset.
struct ReplayPolicy {
    double ratio = 0.0;
    uint64_t seed = 0;
    bool fixed_buffer = false;
    bool ratio_of_mixed_total = false;  // alternative reading: fraction of the mixed total

    void validate() const {
        if (ratio < 0.0 || ratio >= 1.0) throw ConfigError("replay ratio must be in [0, 1)");
    }
};

// Reference to a training sample: replay items index the original-domain
// train set, others the new-domain train set.
struct SampleRef {
    bool replay = false;
    int32_t index = 0;

    bool operator==(const SampleRef&) const = default;
};

struct MixedSchedule {
    int batch_size = 0;
    // epoch -> batch -> samples
    std::vector<std::vector<std::vector<SampleRef>>> epochs;

    int64_t steps_per_epoch() const {
        return epochs.empty() ? 0 : static_cast<int64_t>(epochs[0].size());
    }
    int64_t total_steps() const {
        int64_t n = 0;
        for (const auto& e : epochs) n += static_cast<int64_t>(e.size());
        return n;
    }
};

inline constexpr int64_t kNoReplayGap = std::numeric_limits<int64_t>::max();

struct EpochProvenance {
    std::vector<std::pair<int, int>> per_batch;  // (new_count, replay_count)
    int64_t new_count = 0;
    int64_t replay_count = 0;
    int64_t max_gap = kNoReplayGap;  // max spacing between replay items, in samples
};

// Number of replay samples drawn per epoch for the given policy.
int64_t replay_count_for(int64_t new_train, const ReplayPolicy& policy);

MixedSchedule build_schedule(int64_t new_train, int64_t orig_train, const ReplayPolicy& policy,
                             int batch_size, int epochs);

// Recomputed per-batch provenance and replay spacing.
std::vector<EpochProvenance> provenance_stats(const MixedSchedule& schedule);

// CSV audit dump: epoch,batch,new_count,replay_count
void dump_provenance_csv(const MixedSchedule& schedule, std::ostream& os);

}  // namespace rlab
