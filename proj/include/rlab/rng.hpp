#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace rlab {

// Counter-based, splittable pseudo-random generator. Every draw is a pure
// function of (key, counter), so streams can be recreated from their key and
// threaded through code explicitly; there is no global state. Splitting
// derives an independent child key from a label, which keeps unrelated
// consumers (init, dropout, data generation, ...) collision-free without
// coordinating counter ranges.
class Rng {
  public:
    Rng() = default;
    explicit Rng(uint64_t key, uint64_t counter = 0) : key_(key), counter_(counter) {}

    static Rng seeded(uint64_t seed) { return Rng(mix(seed ^ 0x8c7f0aac97c4aa2full)); }

    Rng split(uint64_t lane) const { return Rng(mix(key_ ^ mix(lane + 0x165667b19e3779f9ull))); }

    Rng split(std::string_view label) const {
        // FNV-1a over the label, then mixed into the key.
        uint64_t h = 0xcbf29ce484222325ull;
        for (unsigned char c : label) {
            h ^= c;
            h *= 0x100000001b3ull;
        }
        return Rng(mix(key_ ^ mix(h)));
    }

    Rng split(std::string_view label, uint64_t lane) const { return split(label).split(lane); }

    uint64_t key() const { return key_; }
    uint64_t counter() const { return counter_; }

    uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ull * ++counter_); }

    // Uniform in [0, 1), 53 bits of mantissa.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n); n must be > 0.
    uint64_t next_below(uint64_t n) {
        // 128-bit multiply trick; bias is negligible for our n << 2^64.
        return static_cast<uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller; consumes exactly two counter slots.
    double next_normal() {
        double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        double u2 = next_double();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    bool operator==(const Rng& o) const { return key_ == o.key_ && counter_ == o.counter_; }

  private:
    static uint64_t mix(uint64_t z) {
        // splitmix64 finalizer.
        z ^= z >> 30;
        z *= 0xbf58476d1ce4e5b9ull;
        z ^= z >> 27;
        z *= 0x94d049bb133111ebull;
        z ^= z >> 31;
        return z;
    }

    uint64_t key_ = 0;
    uint64_t counter_ = 0;
};

}  // namespace rlab
