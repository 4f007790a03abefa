#pragma once

#include <cstdint>
#include <random>

namespace sors {

/// splitmix64 finalizer; used for seed derivation and stable index hashing.
constexpr uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// Independent stream id for a given base seed. Streams with distinct ids are
/// decorrelated, so subsystems (init, actions, pair sampling, eval) cannot
/// perturb each other's draws.
constexpr uint64_t derive_stream(uint64_t seed, uint64_t stream_id) {
    return mix64(seed ^ mix64(stream_id));
}

/// mt19937_64 with hand-rolled conversions. std::uniform_* distributions are
/// implementation-defined, so draws go through fixed arithmetic only; identical
/// seeds give identical streams on any conforming platform.
class Rng {
public:
    explicit Rng(uint64_t seed) : gen_(seed) {}

    uint64_t next_u64() { return gen_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n). Requires n > 0.
    int uniform_int(int n) {
        return static_cast<int>((static_cast<unsigned __int128>(gen_()) *
                                 static_cast<uint64_t>(n)) >> 64);
    }

private:
    std::mt19937_64 gen_;
};

} // namespace sors
