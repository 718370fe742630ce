#pragma once

#include <cstdint>
#include <vector>

#include "goalsim/chan/channels.hpp"
#include "goalsim/sim/rng.hpp"

namespace goalsim::air {

enum class PoolingMode { average, max_approx };

struct PoolingConfig {
    double p = 1.0;  // >= 1
    PoolingMode mode = PoolingMode::max_approx;
};

// N nonnegative feature vectors of equal dimension.
struct FeatureBatch {
    std::vector<std::vector<double>> features;

    std::size_t device_count() const { return features.size(); }
    std::size_t dimension() const {
        return features.empty() ? 0 : features.front().size();
    }
    void check() const;  // nonnegative entries, consistent dimensions
};

// p-norm AirPooling: devices transmit x^p, the MAC superposes them, the
// server takes the p-th root (and divides by N in average mode, p = 1).
// Negative post-noise sums are clamped to zero before the root.
std::vector<double> air_pool(const FeatureBatch& batch, const PoolingConfig& cfg,
                             const chan::GaussianMAC& mac, sim::RngStream& rng);

// Mean absolute gap between noiseless p-norm pooling and the exact
// per-component max.
double max_approx_error(const FeatureBatch& batch, double p);

// --- FEEL aggregation schemes ---------------------------------------------

struct FeelRound {
    std::vector<std::vector<double>> updates;  // one per device
    double learning_rate = 1.0;
};

// Perfect aggregation: exact arithmetic mean of the updates.
std::vector<double> feel_round_pa(const FeelRound& round);

// One-bit digital aggregation: devices send signs, the server applies the
// majority direction scaled by the learning rate. sign(0) is +1.
std::vector<double> feel_round_obda(const FeelRound& round,
                                    const chan::GaussianMAC& mac,
                                    sim::RngStream& rng);

struct Codebook {
    std::size_t block_len = 1;            // Q
    std::vector<std::vector<double>> centroids;  // 2^J entries of length Q
};

// Seeded k-means over the Q-blocks of the given sample vectors;
// deterministic for a fixed seed.
Codebook train_codebook(const std::vector<std::vector<double>>& samples,
                        std::size_t block_len, std::size_t codebook_bits,
                        std::uint64_t seed, std::size_t iterations = 25);

// Nearest-centroid index per Q-block (squared error, lowest index wins
// ties). The update dimension must be divisible by Q.
std::vector<std::size_t> quantize_vq(const std::vector<double>& update,
                                     const Codebook& codebook);

std::vector<double> dequantize_vq(const std::vector<std::size_t>& indices,
                                  const Codebook& codebook);

enum class GdoacDetector { genie, matched_filter };

struct GdoacConfig {
    GdoacDetector detector = GdoacDetector::genie;
    double signature_noise_var = 0.0;  // MAC noise for the matched filter
    std::size_t signature_len = 0;     // 0 = auto (codebook size)
    std::uint64_t signature_seed = 1;
    // Explicit per-codeword signatures override the seeded Gaussian ones.
    std::vector<std::vector<double>> signatures;
};

// Unsourced-counting aggregation: recover how many devices sent each
// codeword per block, then average the corresponding centroids. The genie
// detector counts exactly; the matched filter correlates Gaussian
// signatures superposed over the MAC and rounds the correlations.
std::vector<double> gdoac_round(const std::vector<std::vector<std::size_t>>& indices,
                                const Codebook& codebook, const GdoacConfig& cfg,
                                sim::RngStream& rng);

// --- Synthetic FEEL task --------------------------------------------------

enum class FeelScheme { PA, OBDA, GDOAC };

struct FeelTaskConfig {
    std::size_t dimension = 20;
    std::size_t devices = 20;
    std::size_t samples_per_device = 50;
    std::size_t rounds = 200;
    double learning_rate = 0.5;
    double obda_learning_rate = 0.02;
    double heterogeneity = 1.0;  // device-specific mean shift scale
    // GD-OAC parameters.
    std::size_t block_len = 5;    // Q
    std::size_t codebook_bits = 6;  // J
    std::size_t warmup_rounds = 10;
    GdoacDetector detector = GdoacDetector::genie;
};

struct FeelCurve {
    std::vector<double> loss;      // global logistic loss per round
    std::vector<double> accuracy;  // training accuracy per round
};

// Federated logistic regression on seeded synthetic heterogeneous data.
// One local full-batch gradient step per round; the scheme decides how
// the gradients are aggregated.
FeelCurve train_feel(const FeelTaskConfig& task, FeelScheme scheme,
                     std::uint64_t seed);

// Centralized full-batch gradient descent on the pooled data, the
// reference the PA curve is compared against.
FeelCurve train_centralized(const FeelTaskConfig& task, std::uint64_t seed);

}  // namespace goalsim::air
