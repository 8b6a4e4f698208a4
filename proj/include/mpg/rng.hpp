#pragma once

#include <cstdint>

namespace mpg {

// SplitMix64 finalizer. The sampling layer derives every random draw from a
// mix of (master_seed, episode, agent, horizon, tag), so results are
// independent of scheduling/worker order.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline uint64_t mix_keys(uint64_t a, uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

inline uint64_t mix_tuple(uint64_t master, uint64_t episode, uint64_t agent, uint64_t horizon,
                          uint64_t tag) {
    uint64_t k = splitmix64(master);
    k = mix_keys(k, episode);
    k = mix_keys(k, agent);
    k = mix_keys(k, horizon);
    k = mix_keys(k, tag);
    return k;
}

/// Uniform double in [0, 1) from a 64-bit key.
inline double uniform_from_key(uint64_t key) {
    return static_cast<double>(key >> 11) * 0x1.0p-53;
}

/// Small deterministic stream generator for test/auxiliary randomness.
class DetRng {
public:
    explicit DetRng(uint64_t seed) : state_(splitmix64(seed)) {}

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }
    double uniform() { return uniform_from_key(next_u64()); }
    /// Uniform integer in [0, n).
    int uniform_int(int n) { return static_cast<int>(next_u64() % static_cast<uint64_t>(n)); }

private:
    uint64_t state_;
};

/// Inverse-CDF draw from a probability row; u in [0,1).
inline int sample_index(const double* probs, int count, double u) {
    double acc = 0.0;
    for (int k = 0; k < count; ++k) {
        acc += probs[k];
        if (u < acc) return k;
    }
    return count - 1;
}

}  // namespace mpg
