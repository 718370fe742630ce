#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace goalsim::sim {

// 64-bit mixing finalizer (splitmix64). Shared by the RNG, the hashed
// feedback codecs, and config hashing so results are bit-exact across
// platforms.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x ^= x >> 30;
    x *= 0xBF58476D1CE4E5B9ULL;
    x ^= x >> 27;
    x *= 0x94D049BB133111EBULL;
    x ^= x >> 31;
    return x;
}

constexpr std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ (b + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2)));
}

inline std::uint64_t hash_string(std::string_view s, std::uint64_t seed = 0) {
    std::uint64_t h = mix64(seed ^ 0xCBF29CE484222325ULL);
    for (unsigned char c : s) h = mix64(h ^ c);
    return hash_combine(h, s.size());
}

// Counter-based stream: the draw at position i is a pure function of
// (root_seed, stream_name, i), so substreams are reproducible and
// independent replications share no state.
class RngStream {
  public:
    RngStream() : key_(mix64(0)) {}
    RngStream(std::uint64_t root_seed, std::string_view name)
        : key_(hash_combine(mix64(root_seed), hash_string(name))) {}

    // Derived stream with an independent key; used for per-sample
    // parallel ensembles.
    RngStream fork(std::uint64_t index) const {
        RngStream s;
        s.key_ = hash_combine(key_, mix64(index ^ 0xA5A5A5A5A5A5A5A5ULL));
        return s;
    }

    std::uint64_t next_u64() { return mix64(key_ ^ (counter_++ * 0xD1342543DE82EF95ULL)); }

    // Uniform in [0, 1).
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n).
    std::uint64_t uniform_int(std::uint64_t n) {
        // Rejection-free modulo is fine at these ranges; bias < 2^-53.
        return static_cast<std::uint64_t>(uniform() * static_cast<double>(n));
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Standard normal via Box-Muller. No caching, so the draw count per
    // call is fixed and streams stay position-deterministic.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        // Guard against log(0).
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    double exponential(double rate) {
        double u = uniform();
        if (u <= 0.0) u = 0x1.0p-53;
        return -std::log(u) / rate;
    }

    std::uint64_t counter() const { return counter_; }
    std::uint64_t key() const { return key_; }

  private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

// Root context handing out named substreams.
class RngRoot {
  public:
    explicit RngRoot(std::uint64_t root_seed) : root_seed_(root_seed) {}

    RngStream substream(std::string_view name) const {
        return RngStream(root_seed_, name);
    }

    std::uint64_t root_seed() const { return root_seed_; }

  private:
    std::uint64_t root_seed_;
};

}  // namespace goalsim::sim
