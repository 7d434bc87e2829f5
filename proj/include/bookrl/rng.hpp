#pragma once

#include <cstdint>
#include <random>

namespace bookrl {

// splitmix64; spreads user-facing seeds into well-mixed engine seeds
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// Decorrelated child seed for stream `stream` of run seed `seed`.
inline uint64_t substream(uint64_t seed, uint64_t stream) {
    return mix64(seed ^ mix64(stream));
}

// Deterministic RNG used throughout. Wraps mt19937_64 with fixed bit
// mappings so results never depend on the standard library's
// distribution implementations.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next_u64() { return engine_(); }

    // uniform double in [0, 1), 53 bits
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n); n must be positive and small (no
    // rejection, modulo bias is below 2^-32 for n < 2^31)
    int uniform_int(int n) {
        return static_cast<int>(engine_() % static_cast<uint64_t>(n));
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace bookrl
