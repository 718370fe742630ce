#include "goalsim/ack/feedback.hpp"

#include <algorithm>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <set>
#include <stdexcept>

namespace goalsim::ack {

using boost::multiprecision::cpp_int;

namespace {

constexpr double kLn2 = 0.6931471805599453;

cpp_int binom(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    if (k > n - k) k = n - k;
    cpp_int r = 1;
    for (std::uint64_t j = 1; j <= k; ++j) {
        r *= n - k + j;
        r /= j;
    }
    return r;
}

double log2_of(const cpp_int& v) {
    if (v <= 0) return -std::numeric_limits<double>::infinity();
    auto b = static_cast<std::uint64_t>(boost::multiprecision::msb(v));
    if (b <= 52) return std::log2(v.convert_to<double>());
    cpp_int top = v >> (b - 52);
    return std::log2(top.convert_to<double>()) + static_cast<double>(b - 52);
}

double log2_binom_approx(double c, double i) {
    return (std::lgamma(c + 1) - std::lgamma(i + 1) - std::lgamma(c - i + 1)) / kLn2;
}

// Largest c in [i-1, hi] with C(c, i) <= r. The lgamma estimate narrows
// the range; exact ratio steps settle it.
std::uint64_t find_largest(std::uint64_t i, const cpp_int& r, std::uint64_t hi) {
    if (r == 0) return i - 1;
    std::uint64_t lo = i;  // C(i, i) = 1 <= r
    std::uint64_t high = hi;
    const double target = log2_of(r);
    while (high - lo > 4) {
        std::uint64_t mid = lo + (high - lo) / 2;
        if (log2_binom_approx(static_cast<double>(mid), static_cast<double>(i)) <=
            target) {
            lo = mid;
        } else {
            high = mid;
        }
    }
    std::uint64_t c = lo;
    cpp_int v = binom(c, i);
    while (v > r && c > i) {
        v = v * (c - i) / c;  // C(c-1, i)
        --c;
    }
    while (c < hi) {
        cpp_int nv = v * (c + 1) / (c + 1 - i);  // C(c+1, i)
        if (nv > r) break;
        v = nv;
        ++c;
    }
    return c;
}

void append_bits(std::vector<std::uint8_t>& buf, std::uint64_t& pos,
                 const cpp_int& value, std::uint64_t nbits) {
    for (std::uint64_t j = nbits; j-- > 0;) {
        std::uint64_t p = pos++;
        if (p / 8 >= buf.size()) buf.resize(p / 8 + 1, 0);
        if (boost::multiprecision::bit_test(value, static_cast<unsigned>(j))) {
            buf[p / 8] |= static_cast<std::uint8_t>(0x80u >> (p % 8));
        }
    }
}

cpp_int read_bits(const std::vector<std::uint8_t>& buf, std::uint64_t pos,
                  std::uint64_t nbits) {
    cpp_int v = 0;
    for (std::uint64_t j = 0; j < nbits; ++j) {
        std::uint64_t p = pos + j;
        if (p / 8 >= buf.size()) throw std::invalid_argument("feedback: bit string too short");
        v <<= 1;
        if (buf[p / 8] & (0x80u >> (p % 8))) v |= 1;
    }
    return v;
}

std::uint64_t ceil_log2_count(const cpp_int& count) {
    if (count <= 1) return 0;
    cpp_int m = count - 1;
    return static_cast<std::uint64_t>(boost::multiprecision::msb(m)) + 1;
}

std::uint64_t fingerprint_bits(double epsilon_fa) {
    // Three extra bits absorb the 2-bucket x 4-slot probe multiplicity.
    auto f = static_cast<std::uint64_t>(
        std::ceil(std::log2(1.0 / epsilon_fa) - 1e-9)) + 3;
    return std::min<std::uint64_t>(f, 56);
}

std::uint64_t next_pow2(std::uint64_t v) {
    std::uint64_t p = 1;
    while (p < v) p <<= 1;
    return p;
}

struct CuckooLayout {
    std::uint64_t buckets = 1;
    std::uint64_t fbits = 1;
    static constexpr std::uint64_t kSlots = 4;
};

CuckooLayout cuckoo_layout(std::size_t k, double epsilon_fa) {
    CuckooLayout lay;
    lay.fbits = fingerprint_bits(epsilon_fa);
    lay.buckets = next_pow2(std::max<std::uint64_t>(1, (k + 1) / 2));
    return lay;
}

std::uint64_t cuckoo_fp(std::uint32_t id, std::uint64_t seed, std::uint64_t fbits) {
    std::uint64_t h = sim::mix64(seed ^ sim::mix64(0x9E3779B97F4A7C15ull ^ id));
    std::uint64_t fp = h & ((std::uint64_t{1} << fbits) - 1);
    return fp == 0 ? 1 : fp;
}

std::uint64_t cuckoo_bucket(std::uint32_t id, std::uint64_t seed, std::uint64_t mask) {
    return sim::mix64(seed ^ id) & mask;
}

std::uint64_t cuckoo_alt(std::uint64_t bucket, std::uint64_t fp, std::uint64_t seed,
                         std::uint64_t mask) {
    return (bucket ^ sim::mix64(seed ^ (fp * 0xC2B2AE3D27D4EB4Full))) & mask;
}

// One attempt at building the table; false when an eviction chain fails.
bool cuckoo_build(const std::vector<std::uint32_t>& ids, const CuckooLayout& lay,
                  std::uint64_t seed, std::vector<std::uint64_t>& table) {
    const std::uint64_t mask = lay.buckets - 1;
    table.assign(lay.buckets * CuckooLayout::kSlots, 0);
    auto try_place = [&](std::uint64_t bucket, std::uint64_t fp) {
        for (std::uint64_t s = 0; s < CuckooLayout::kSlots; ++s) {
            auto& slot = table[bucket * CuckooLayout::kSlots + s];
            if (slot == 0) {
                slot = fp;
                return true;
            }
        }
        return false;
    };
    std::uint64_t kick = 0;
    for (std::uint32_t id : ids) {
        std::uint64_t fp = cuckoo_fp(id, seed, lay.fbits);
        std::uint64_t b1 = cuckoo_bucket(id, seed, mask);
        std::uint64_t b2 = cuckoo_alt(b1, fp, seed, mask);
        if (try_place(b1, fp) || try_place(b2, fp)) continue;
        std::uint64_t bucket = b1;
        bool placed = false;
        for (int depth = 0; depth < 500; ++depth) {
            std::uint64_t s = kick++ % CuckooLayout::kSlots;
            std::swap(fp, table[bucket * CuckooLayout::kSlots + s]);
            bucket = cuckoo_alt(bucket, fp, seed, mask);
            if (try_place(bucket, fp)) {
                placed = true;
                break;
            }
        }
        if (!placed) return false;
    }
    return true;
}

std::uint64_t bloom_size(std::size_t k, double epsilon_fa) {
    return static_cast<std::uint64_t>(
        std::ceil(1.44 * static_cast<double>(k) * std::log2(1.0 / epsilon_fa)));
}

std::uint64_t bloom_hashes(std::size_t k, std::uint64_t m) {
    if (k == 0) return 1;
    auto h = static_cast<std::uint64_t>(
        std::llround(static_cast<double>(m) / static_cast<double>(k) * kLn2));
    return std::max<std::uint64_t>(1, h);
}

}  // namespace

void AckSet::check() const {
    if (ids.size() > kMaxAcked) throw std::invalid_argument("AckSet: too many IDs");
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i > 0 && ids[i] <= ids[i - 1]) {
            throw std::invalid_argument("AckSet: ids must be strictly increasing");
        }
        if (ids[i] >= population) throw std::invalid_argument("AckSet: id out of range");
    }
}

std::string to_string(AckScheme scheme) {
    switch (scheme) {
        case AckScheme::Concat: return "concat";
        case AckScheme::Enumerative: return "enumerative";
        case AckScheme::HashSig: return "hashsig";
        case AckScheme::Bloom: return "bloom";
    }
    return "unknown";
}

std::vector<std::uint8_t> subset_rank_bits(const AckSet& ack, std::uint64_t* out_bits) {
    ack.check();
    const std::size_t k = ack.count();
    cpp_int rank = 0;
    for (std::size_t i = 0; i < k; ++i) {
        rank += binom(ack.ids[i], static_cast<std::uint64_t>(i) + 1);
    }
    std::uint64_t nbits = ceil_log2_count(binom(ack.population, k));
    std::vector<std::uint8_t> buf;
    std::uint64_t pos = 0;
    append_bits(buf, pos, rank, nbits);
    if (out_bits) *out_bits = nbits;
    return buf;
}

std::vector<std::uint32_t> subset_unrank_bits(const std::vector<std::uint8_t>& bits,
                                              std::uint64_t bit_len,
                                              std::uint64_t population, std::size_t k) {
    cpp_int rank = read_bits(bits, 0, bit_len);
    std::vector<std::uint32_t> ids(k);
    std::uint64_t hi = population - 1;
    for (std::size_t i = k; i-- > 0;) {
        std::uint64_t idx = static_cast<std::uint64_t>(i) + 1;
        std::uint64_t c = find_largest(idx, rank, hi);
        ids[i] = static_cast<std::uint32_t>(c);
        rank -= binom(c, idx);
        hi = c == 0 ? 0 : c - 1;
    }
    return ids;
}

EncodedFeedback encode(AckScheme scheme, const AckSet& ack, double epsilon_fa,
                       std::uint64_t seed) {
    ack.check();
    if ((scheme == AckScheme::HashSig || scheme == AckScheme::Bloom) &&
        (epsilon_fa <= 0.0 || epsilon_fa >= 1.0)) {
        throw std::invalid_argument("encode: epsilon_fa must lie in (0, 1)");
    }
    EncodedFeedback out;
    out.scheme = scheme;
    out.population = ack.population;
    out.acked = ack.count();
    out.epsilon_fa = epsilon_fa;
    out.seed = seed;

    switch (scheme) {
        case AckScheme::Concat: {
            std::uint64_t pos = 0;
            for (std::uint32_t id : ack.ids) {
                append_bits(out.bits, pos, cpp_int(id), 32);
            }
            out.bit_len = pos;
            break;
        }
        case AckScheme::Enumerative: {
            out.bits = subset_rank_bits(ack, &out.bit_len);
            out.header_bits = ceil_log2_count(cpp_int(kMaxAcked + 1));
            break;
        }
        case AckScheme::HashSig: {
            auto lay = cuckoo_layout(ack.count(), epsilon_fa);
            std::vector<std::uint64_t> table;
            std::uint64_t offset = 0;
            while (!cuckoo_build(ack.ids, lay, seed + offset, table)) {
                ++offset;
                if (offset > 64) {
                    lay.buckets <<= 1;
                    offset = 0;
                }
            }
            out.seed_offset = offset;
            out.table_buckets = lay.buckets;
            std::uint64_t pos = 0;
            for (std::uint64_t slot : table) {
                append_bits(out.bits, pos, cpp_int(slot), lay.fbits);
            }
            out.bit_len = pos;
            break;
        }
        case AckScheme::Bloom: {
            const std::uint64_t m = bloom_size(ack.count(), epsilon_fa);
            const std::uint64_t h = bloom_hashes(ack.count(), m);
            out.hash_count = h;
            out.bits.assign((m + 7) / 8, 0);
            for (std::uint32_t id : ack.ids) {
                std::uint64_t h1 = sim::mix64(seed ^ id);
                std::uint64_t h2 = sim::mix64(h1 ^ 0x9E3779B97F4A7C15ull) | 1;
                for (std::uint64_t j = 0; j < h; ++j) {
                    std::uint64_t p = (h1 + j * h2) % m;
                    out.bits[p / 8] |= static_cast<std::uint8_t>(0x80u >> (p % 8));
                }
            }
            out.bit_len = m;
            break;
        }
    }
    return out;
}

AckSet decode_ack_set(const EncodedFeedback& feedback) {
    AckSet ack;
    ack.population = feedback.population;
    if (feedback.scheme == AckScheme::Concat) {
        for (std::size_t i = 0; i < feedback.acked; ++i) {
            ack.ids.push_back(
                read_bits(feedback.bits, 32 * i, 32).convert_to<std::uint32_t>());
        }
    } else if (feedback.scheme == AckScheme::Enumerative) {
        ack.ids = subset_unrank_bits(feedback.bits, feedback.bit_len,
                                     feedback.population, feedback.acked);
    } else {
        throw std::invalid_argument("decode_ack_set: hashed schemes are not invertible");
    }
    ack.check();
    return ack;
}

bool decode_membership(const EncodedFeedback& feedback, std::uint32_t user_id) {
    switch (feedback.scheme) {
        case AckScheme::Concat:
        case AckScheme::Enumerative: {
            auto ack = decode_ack_set(feedback);
            return std::binary_search(ack.ids.begin(), ack.ids.end(), user_id);
        }
        case AckScheme::HashSig: {
            auto lay = cuckoo_layout(feedback.acked, feedback.epsilon_fa);
            lay.buckets = feedback.table_buckets;
            const std::uint64_t mask = lay.buckets - 1;
            const std::uint64_t s = feedback.seed + feedback.seed_offset;
            std::uint64_t fp = cuckoo_fp(user_id, s, lay.fbits);
            std::uint64_t b1 = cuckoo_bucket(user_id, s, mask);
            std::uint64_t b2 = cuckoo_alt(b1, fp, s, mask);
            for (std::uint64_t b : {b1, b2}) {
                for (std::uint64_t slot = 0; slot < CuckooLayout::kSlots; ++slot) {
                    std::uint64_t pos = (b * CuckooLayout::kSlots + slot) * lay.fbits;
                    if (read_bits(feedback.bits, pos, lay.fbits) == fp) return true;
                }
            }
            return false;
        }
        case AckScheme::Bloom: {
            const std::uint64_t m = feedback.bit_len;
            if (m == 0) return false;
            std::uint64_t h1 = sim::mix64(feedback.seed ^ user_id);
            std::uint64_t h2 = sim::mix64(h1 ^ 0x9E3779B97F4A7C15ull) | 1;
            for (std::uint64_t j = 0; j < feedback.hash_count; ++j) {
                std::uint64_t p = (h1 + j * h2) % m;
                if (!(feedback.bits[p / 8] & (0x80u >> (p % 8)))) return false;
            }
            return true;
        }
    }
    throw std::invalid_argument("decode_membership: unknown scheme");
}

FeedbackBounds bounds(std::uint64_t population, std::size_t k, double epsilon_fa) {
    if (k == 0) throw std::invalid_argument("bounds: K must be positive");
    FeedbackBounds b;
    b.b_concat = 32 * static_cast<std::uint64_t>(k);
    b.b_errorfree = ceil_log2_count(binom(population, k));
    b.b_fa = static_cast<std::uint64_t>(std::ceil(
        static_cast<double>(k) * std::log2(1.0 / epsilon_fa) - 1e-9));
    return b;
}

std::vector<SweepRow> sweep(const std::vector<std::size_t>& k_values,
                            std::uint64_t population, double epsilon_fa,
                            std::size_t fa_probes, std::uint64_t seed) {
    std::vector<SweepRow> rows;
    sim::RngStream rng(seed, "ack_sweep");
    for (std::size_t k : k_values) {
        AckSet ack;
        ack.population = population;
        std::set<std::uint32_t> ids;
        while (ids.size() < k) {
            ids.insert(static_cast<std::uint32_t>(rng.uniform_int(population)));
        }
        ack.ids.assign(ids.begin(), ids.end());
        for (AckScheme scheme : {AckScheme::Concat, AckScheme::Enumerative,
                                 AckScheme::HashSig, AckScheme::Bloom}) {
            auto enc = encode(scheme, ack, epsilon_fa, seed);
            SweepRow row;
            row.k = k;
            row.scheme = to_string(scheme);
            row.b_bits = enc.bit_len;
            if (scheme == AckScheme::HashSig || scheme == AckScheme::Bloom) {
                std::size_t hits = 0;
                for (std::size_t p = 0; p < fa_probes; ++p) {
                    std::uint32_t probe;
                    do {
                        probe = static_cast<std::uint32_t>(rng.uniform_int(population));
                    } while (ids.count(probe));
                    if (decode_membership(enc, probe)) ++hits;
                }
                row.fa_rate = fa_probes
                                  ? static_cast<double>(hits) /
                                        static_cast<double>(fa_probes)
                                  : 0.0;
            }
            rows.push_back(std::move(row));
        }
    }
    return rows;
}

}  // namespace goalsim::ack
