#include "doctest.h"

#include <set>
#include <sstream>
#include <vector>

#include "rlab/replay.hpp"

using namespace rlab;

TEST_SUITE("replay") {

TEST_CASE("replay counts follow ceil(r * new_train)") {
    CHECK(replay_count_for(1404, ReplayPolicy{0.1, 0}) == 141);
    CHECK(replay_count_for(1404, ReplayPolicy{0.2, 0}) == 281);
    CHECK(replay_count_for(1404, ReplayPolicy{0.0, 0}) == 0);
    // exact products must not round up through float fuzz
    CHECK(replay_count_for(1405, ReplayPolicy{0.2, 0}) == 281);
    CHECK(replay_count_for(10, ReplayPolicy{0.5, 0}) == 5);
}

TEST_CASE("r=0 schedules contain only new-domain samples") {
    const MixedSchedule s = build_schedule(100, 1000, ReplayPolicy{0.0, 7}, 16, 2);
    for (const auto& epoch : s.epochs)
        for (const auto& batch : epoch)
            for (const SampleRef& ref : batch) CHECK_FALSE(ref.replay);
    const auto stats = provenance_stats(s);
    CHECK(stats[0].replay_count == 0);
    CHECK(stats[0].max_gap == kNoReplayGap);
}

TEST_CASE("conservation: every new sample once per epoch, distinct replay samples") {
    const int64_t n_new = 333, n_orig = 4000;
    const MixedSchedule s = build_schedule(n_new, n_orig, ReplayPolicy{0.17, 13}, 32, 3);
    for (const auto& epoch : s.epochs) {
        std::vector<int> new_seen(static_cast<size_t>(n_new), 0);
        std::set<int32_t> replay_seen;
        int64_t replay_total = 0;
        for (const auto& batch : epoch)
            for (const SampleRef& ref : batch) {
                if (ref.replay) {
                    CHECK(replay_seen.insert(ref.index).second);  // no duplicates
                    CHECK(ref.index < n_orig);
                    ++replay_total;
                } else {
                    ++new_seen[static_cast<size_t>(ref.index)];
                }
            }
        for (int count : new_seen) CHECK(count == 1);
        CHECK(replay_total == replay_count_for(n_new, ReplayPolicy{0.17, 13}));
    }
}

TEST_CASE("per-epoch resampling vs fixed buffer") {
    auto replay_sets = [](const MixedSchedule& s) {
        std::vector<std::set<int32_t>> sets;
        for (const auto& epoch : s.epochs) {
            std::set<int32_t> items;
            for (const auto& batch : epoch)
                for (const SampleRef& ref : batch)
                    if (ref.replay) items.insert(ref.index);
            sets.push_back(std::move(items));
        }
        return sets;
    };
    const auto fresh = replay_sets(build_schedule(200, 5000, ReplayPolicy{0.2, 5}, 16, 3));
    CHECK(fresh[0] != fresh[1]);  // resampled each epoch
    ReplayPolicy fixed{0.2, 5};
    fixed.fixed_buffer = true;
    const auto buffered = replay_sets(build_schedule(200, 5000, fixed, 16, 3));
    CHECK(buffered[0] == buffered[1]);
    CHECK(buffered[1] == buffered[2]);
}

TEST_CASE("determinism: the seed fully determines the schedule") {
    const MixedSchedule a = build_schedule(150, 900, ReplayPolicy{0.1, 42}, 20, 2);
    const MixedSchedule b = build_schedule(150, 900, ReplayPolicy{0.1, 42}, 20, 2);
    const MixedSchedule c = build_schedule(150, 900, ReplayPolicy{0.1, 43}, 20, 2);
    CHECK(a.epochs == b.epochs);
    CHECK(a.epochs != c.epochs);
}

TEST_CASE("batch sizes and the spread bound") {
    const int batch_size = 28;
    for (double ratio : {0.1, 0.2}) {
        const MixedSchedule s = build_schedule(1404, 20000, ReplayPolicy{ratio, 3}, batch_size, 5);
        const int64_t replay_count = replay_count_for(1404, ReplayPolicy{ratio, 3});
        const int64_t total = 1404 + replay_count;
        const auto stats = provenance_stats(s);
        for (size_t e = 0; e < s.epochs.size(); ++e) {
            for (size_t b = 0; b + 1 < s.epochs[e].size(); ++b)
                CHECK(static_cast<int>(s.epochs[e][b].size()) == batch_size);
            CHECK(static_cast<int>(s.epochs[e].back().size()) <= batch_size);
            CHECK(stats[e].new_count + stats[e].replay_count == total);
            CHECK(stats[e].replay_count == replay_count);
            const int64_t bound = (total + replay_count - 1) / replay_count + batch_size;
            CHECK(stats[e].max_gap <= bound);
        }
    }
}

TEST_CASE("pigeonhole: enough replay samples reach every batch") {
    const MixedSchedule s = build_schedule(1404, 20000, ReplayPolicy{0.2, 11}, 128, 1);
    const auto stats = provenance_stats(s);
    REQUIRE(stats[0].replay_count >= static_cast<int64_t>(stats[0].per_batch.size()));
    for (const auto& [new_count, replay_count] : stats[0].per_batch) CHECK(replay_count >= 1);
}

TEST_CASE("insufficient original data reports the required count") {
    CHECK_THROWS_WITH_AS(build_schedule(1000, 50, ReplayPolicy{0.1, 0}, 16, 1),
                         doctest::Contains("100"), ConfigError);
    CHECK_NOTHROW(build_schedule(1000, 100, ReplayPolicy{0.1, 0}, 16, 1));
}

TEST_CASE("alternative ratio semantics: fraction of the mixed total") {
    ReplayPolicy p{0.2, 0};
    p.ratio_of_mixed_total = true;
    const int64_t k = replay_count_for(1000, p);
    CHECK(k == 250);  // 250 / (1000 + 250) = 0.2
}

TEST_CASE("provenance CSV format") {
    const MixedSchedule s = build_schedule(6, 100, ReplayPolicy{0.5, 1}, 3, 1);
    std::ostringstream os;
    dump_provenance_csv(s, os);
    const std::string text = os.str();
    CHECK(text.rfind("epoch,batch,new_count,replay_count\n", 0) == 0);
    CHECK(text.find("0,0,") != std::string::npos);
}

TEST_CASE("invalid policies are rejected") {
    const ReplayPolicy negative{-0.1, 0};
    const ReplayPolicy too_high{1.0, 0};
    CHECK_THROWS_AS(negative.validate(), ConfigError);
    CHECK_THROWS_AS(too_high.validate(), ConfigError);
    CHECK_THROWS_AS(build_schedule(0, 10, ReplayPolicy{0.1, 0}, 4, 1), ConfigError);
    CHECK_THROWS_AS(build_schedule(10, 10, ReplayPolicy{0.1, 0}, 0, 1), ConfigError);
}

}  // TEST_SUITE
