#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "goalsim/sim/rng.hpp"

namespace goalsim::ack {

inline constexpr std::size_t kMaxAcked = 1000;

// K distinct acknowledged user IDs out of a population of N.
struct AckSet {
    std::uint64_t population = std::uint64_t{1} << 32;
    std::vector<std::uint32_t> ids;  // strictly increasing

    std::size_t count() const { return ids.size(); }
    void check() const;
};

enum class AckScheme { Concat, Enumerative, HashSig, Bloom };

std::string to_string(AckScheme scheme);

struct EncodedFeedback {
    AckScheme scheme = AckScheme::Concat;
    std::vector<std::uint8_t> bits;  // packed MSB-first
    std::uint64_t bit_len = 0;       // B, excluding the K header
    std::uint64_t header_bits = 0;   // Enumerative K field, reported separately
    // Decode metadata (carried out of band, not counted in B).
    std::uint64_t population = 0;
    std::size_t acked = 0;
    double epsilon_fa = 0.0;
    std::uint64_t seed = 0;
    std::uint64_t seed_offset = 0;   // HashSig rehash count
    std::uint64_t table_buckets = 0;  // HashSig
    std::uint64_t hash_count = 0;     // Bloom
};

EncodedFeedback encode(AckScheme scheme, const AckSet& ack, double epsilon_fa,
                       std::uint64_t seed);

// Exact reconstruction; Concat and Enumerative only.
AckSet decode_ack_set(const EncodedFeedback& feedback);

// One-sided membership: acked users always return true; under HashSig and
// Bloom a non-acked user returns true with probability about epsilon_fa.
bool decode_membership(const EncodedFeedback& feedback, std::uint32_t user_id);

struct FeedbackBounds {
    std::uint64_t b_concat = 0;     // 32K
    std::uint64_t b_errorfree = 0;  // ceil(log2 C(N,K))
    std::uint64_t b_fa = 0;         // ceil(K log2(1/eps))
};

FeedbackBounds bounds(std::uint64_t population, std::size_t k, double epsilon_fa);

// Rank of a K-subset in the combinatorial number system, and its inverse.
// Exposed for the round-trip property tests; `rank_bits` is the bit budget
// ceil(log2 C(N,K)).
std::vector<std::uint8_t> subset_rank_bits(const AckSet& ack, std::uint64_t* out_bits);
std::vector<std::uint32_t> subset_unrank_bits(const std::vector<std::uint8_t>& bits,
                                              std::uint64_t bit_len,
                                              std::uint64_t population, std::size_t k);

struct SweepRow {
    std::size_t k = 0;
    std::string scheme;
    std::uint64_t b_bits = 0;
    double fa_rate = 0.0;  // empirical, hashed schemes only
};

// One row per (K, scheme); FA rates estimated over `fa_probes` random
// non-acked users.
std::vector<SweepRow> sweep(const std::vector<std::size_t>& k_values,
                            std::uint64_t population, double epsilon_fa,
                            std::size_t fa_probes, std::uint64_t seed);

}  // namespace goalsim::ack
