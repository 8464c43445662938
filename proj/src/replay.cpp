#include "rlab/replay.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace rlab {

namespace {

// ceil(ratio * n) robust against cases like 0.2 * 1405 landing a hair above
// the exact integer in floating point.
int64_t robust_ceil(double x) {
    const double eps = 1e-9 * std::max(1.0, std::abs(x));
    return static_cast<int64_t>(std::ceil(x - eps));
}

std::vector<int32_t> sample_without_replacement(int64_t population, int64_t count, Rng rng) {
    std::vector<int32_t> pool(static_cast<size_t>(population));
    std::iota(pool.begin(), pool.end(), 0);
    for (int64_t i = 0; i < count; ++i) {
        const uint64_t j = i + rng.next_below(static_cast<uint64_t>(population - i));
        std::swap(pool[static_cast<size_t>(i)], pool[static_cast<size_t>(j)]);
    }
    pool.resize(static_cast<size_t>(count));
    return pool;
}

void shuffle(std::vector<int32_t>& v, Rng rng) {
    for (size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[rng.next_below(static_cast<uint64_t>(i))]);
}

}  // namespace

int64_t replay_count_for(int64_t new_train, const ReplayPolicy& policy) {
    policy.validate();
    if (policy.ratio == 0.0) return 0;
    if (policy.ratio_of_mixed_total)
        return robust_ceil(policy.ratio * static_cast<double>(new_train) / (1.0 - policy.ratio));
    return robust_ceil(policy.ratio * static_cast<double>(new_train));
}

MixedSchedule build_schedule(int64_t new_train, int64_t orig_train, const ReplayPolicy& policy,
                             int batch_size, int epochs) {
    policy.validate();
    if (new_train <= 0) throw ConfigError("empty new-domain training set");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    const int64_t replay_count = replay_count_for(new_train, policy);
    if (replay_count > orig_train)
        throw ConfigError("replay needs " + std::to_string(replay_count) +
                          " original-domain samples per epoch but only " +
                          std::to_string(orig_train) + " are available");

    MixedSchedule schedule;
    schedule.batch_size = batch_size;
    schedule.epochs.reserve(static_cast<size_t>(epochs));
    const Rng root = Rng::seeded(policy.seed);
    std::vector<int32_t> fixed_replay;
    if (policy.fixed_buffer && replay_count > 0)
        fixed_replay = sample_without_replacement(orig_train, replay_count, root.split("replay", 0));

    for (int e = 0; e < epochs; ++e) {
        const Rng epoch_rng = root.split("epoch", static_cast<uint64_t>(e));
        std::vector<int32_t> replay_items =
            policy.fixed_buffer ? fixed_replay
            : replay_count > 0
                ? sample_without_replacement(orig_train, replay_count, epoch_rng.split("replay"))
                : std::vector<int32_t>{};
        std::vector<int32_t> new_items(static_cast<size_t>(new_train));
        std::iota(new_items.begin(), new_items.end(), 0);
        shuffle(new_items, epoch_rng.split("order"));

        const int64_t total = new_train + replay_count;
        std::vector<SampleRef> flat(static_cast<size_t>(total));
        std::vector<char> is_replay_slot(static_cast<size_t>(total), 0);
        // evenly spaced replay positions: slot_j = floor((2j+1) * total / 2k)
        for (int64_t j = 0; j < replay_count; ++j) {
            const int64_t pos = (2 * j + 1) * total / (2 * replay_count);
            is_replay_slot[static_cast<size_t>(pos)] = 1;
            flat[static_cast<size_t>(pos)] = SampleRef{true, replay_items[static_cast<size_t>(j)]};
        }
        size_t next_new = 0;
        for (int64_t i = 0; i < total; ++i) {
            if (!is_replay_slot[static_cast<size_t>(i)])
                flat[static_cast<size_t>(i)] = SampleRef{false, new_items[next_new++]};
        }

        std::vector<std::vector<SampleRef>> batches;
        for (int64_t start = 0; start < total; start += batch_size) {
            const int64_t len = std::min<int64_t>(batch_size, total - start);
            batches.emplace_back(flat.begin() + start, flat.begin() + start + len);
        }
        schedule.epochs.push_back(std::move(batches));
    }
    return schedule;
}

std::vector<EpochProvenance> provenance_stats(const MixedSchedule& schedule) {
    std::vector<EpochProvenance> out;
    out.reserve(schedule.epochs.size());
    for (const auto& epoch : schedule.epochs) {
        EpochProvenance p;
        int64_t pos = 0;
        int64_t prev_replay = -1;
        int64_t max_gap = 0;
        bool any_replay = false;
        for (const auto& batch : epoch) {
            int new_count = 0, replay_count = 0;
            for (const SampleRef& ref : batch) {
                if (ref.replay) {
                    ++replay_count;
                    any_replay = true;
                    max_gap = std::max(max_gap, pos - prev_replay);
                    prev_replay = pos;
                } else {
                    ++new_count;
                }
                ++pos;
            }
            p.per_batch.emplace_back(new_count, replay_count);
            p.new_count += new_count;
            p.replay_count += replay_count;
        }
        if (any_replay) {
            max_gap = std::max(max_gap, pos - prev_replay);
            p.max_gap = max_gap;
        } else {
            p.max_gap = kNoReplayGap;
        }
        out.push_back(std::move(p));
    }
    return out;
}

void dump_provenance_csv(const MixedSchedule& schedule, std::ostream& os) {
    os << "epoch,batch,new_count,replay_count\n";
    const std::vector<EpochProvenance> stats = provenance_stats(schedule);
    for (size_t e = 0; e < stats.size(); ++e)
        for (size_t b = 0; b < stats[e].per_batch.size(); ++b)
            os << e << ',' << b << ',' << stats[e].per_batch[b].first << ','
               << stats[e].per_batch[b].second << '\n';
}

}  // namespace rlab
