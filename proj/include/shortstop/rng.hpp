#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>

// Keyed deterministic randomness.
//
// Reproducibility contract: a benchmark run must serialize byte-identically
// when repeated with the same seed, and every draw is keyed by *what* it is
// for (problem, attempt, position, purpose) rather than by draw order, so the
// stream survives concurrency and partial regeneration. std::mt19937 plus the
// standard distributions would tie us to unspecified library internals;
// splitmix64 and Box-Muller are pinned here instead.

namespace shortstop {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t hash_mix(uint64_t seed, uint64_t v) {
    return splitmix64(seed ^ (v + 0x9e3779b97f4a7c15ULL + (seed << 6) + (seed >> 2)));
}

inline uint64_t hash_str(uint64_t seed, std::string_view s) {
    uint64_t h = splitmix64(seed ^ 0x8a91a6d40bf42040ULL);
    for (unsigned char c : s)
        h = (h ^ c) * 0x100000001b3ULL;
    return splitmix64(h);
}

// Builds a 64-bit key from heterogeneous parts; order matters.
inline uint64_t make_key(uint64_t seed) { return splitmix64(seed); }

template <typename... Rest>
uint64_t make_key(uint64_t seed, uint64_t head, Rest... rest) {
    return make_key(hash_mix(seed, head), rest...);
}

template <typename... Rest>
uint64_t make_key(uint64_t seed, std::string_view head, Rest... rest) {
    return make_key(hash_str(seed, head), rest...);
}

// Counter-based generator over a fixed key: state advances by hashing, so any
// (key, draw-index) pair yields the same value on every platform we target.
class KeyedRng {
public:
    explicit KeyedRng(uint64_t key) : state_(splitmix64(key ^ 0xd1b54a32d192ed03ULL)) {}

    uint64_t next_u64() {
        state_ = splitmix64(state_);
        return state_;
    }

    // Uniform in [0, 1) with 53-bit resolution (exact dyadic rational).
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return uniform01() < p; }

    // Uniform integer in [0, n); n > 0. Multiply-shift rejection-free map is
    // fine here: bias is < n / 2^64, far below anything our tests can see.
    uint64_t uniform_int(uint64_t n) {
        return static_cast<uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
    }

    // Standard normal via Box-Muller; consumes exactly two uniforms per call
    // (no caching, so draw sequences stay position-independent).
    double normal() {
        double u1 = uniform01();
        double u2 = uniform01();
        // avoid log(0)
        if (u1 <= 0x1.0p-60) u1 = 0x1.0p-60;
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    uint64_t state_;
};

} // namespace shortstop
