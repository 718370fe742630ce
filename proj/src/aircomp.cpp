#include "goalsim/air/aircomp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace goalsim::air {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

struct LogisticData {
    // Per device: feature rows and +/-1 labels.
    std::vector<std::vector<std::vector<double>>> x;
    std::vector<std::vector<double>> y;
};

LogisticData make_data(const FeelTaskConfig& task, std::uint64_t seed) {
    sim::RngStream rng(seed, "feel_data");
    const std::size_t d = task.dimension;
    std::vector<double> w_true(d);
    for (auto& w : w_true) w = rng.normal();

    LogisticData data;
    data.x.resize(task.devices);
    data.y.resize(task.devices);
    for (std::size_t n = 0; n < task.devices; ++n) {
        // Device-specific feature shift makes the local data heterogeneous.
        std::vector<double> shift(d);
        for (auto& s : shift) s = task.heterogeneity * rng.normal();
        for (std::size_t i = 0; i < task.samples_per_device; ++i) {
            std::vector<double> x(d);
            double z = 0.0;
            for (std::size_t j = 0; j < d; ++j) {
                x[j] = shift[j] + rng.normal();
                z += w_true[j] * x[j];
            }
            double label = rng.bernoulli(sigmoid(z)) ? 1.0 : -1.0;
            data.x[n].push_back(std::move(x));
            data.y[n].push_back(label);
        }
    }
    return data;
}

std::vector<double> local_gradient(const LogisticData& data, std::size_t device,
                                   const std::vector<double>& w) {
    const std::size_t d = w.size();
    std::vector<double> g(d, 0.0);
    const auto& xs = data.x[device];
    const auto& ys = data.y[device];
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double z = 0.0;
        for (std::size_t j = 0; j < d; ++j) z += w[j] * xs[i][j];
        double coeff = -ys[i] * sigmoid(-ys[i] * z);
        for (std::size_t j = 0; j < d; ++j) g[j] += coeff * xs[i][j];
    }
    for (auto& v : g) v /= static_cast<double>(xs.size());
    return g;
}

std::pair<double, double> global_loss_acc(const LogisticData& data,
                                          const std::vector<double>& w) {
    double loss = 0.0;
    std::size_t correct = 0, total = 0;
    for (std::size_t n = 0; n < data.x.size(); ++n) {
        for (std::size_t i = 0; i < data.x[n].size(); ++i) {
            double z = 0.0;
            for (std::size_t j = 0; j < w.size(); ++j) z += w[j] * data.x[n][i][j];
            double yz = data.y[n][i] * z;
            // log(1 + exp(-yz)), stably.
            loss += yz > 0 ? std::log1p(std::exp(-yz)) : -yz + std::log1p(std::exp(yz));
            if ((z >= 0 ? 1.0 : -1.0) == data.y[n][i]) ++correct;
            ++total;
        }
    }
    return {loss / static_cast<double>(total),
            static_cast<double>(correct) / static_cast<double>(total)};
}

double l2_norm(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

}  // namespace

void FeatureBatch::check() const {
    if (features.empty()) throw std::invalid_argument("FeatureBatch: empty batch");
    const std::size_t d = features.front().size();
    for (const auto& f : features) {
        if (f.size() != d) throw std::invalid_argument("FeatureBatch: dimension mismatch");
        for (double x : f) {
            if (x < 0.0) throw std::invalid_argument("FeatureBatch: negative feature");
        }
    }
}

std::vector<double> air_pool(const FeatureBatch& batch, const PoolingConfig& cfg,
                             const chan::GaussianMAC& mac, sim::RngStream& rng) {
    batch.check();
    if (cfg.p < 1.0) throw std::invalid_argument("air_pool: p must be >= 1");
    if (cfg.mode == PoolingMode::average && cfg.p != 1.0) {
        throw std::invalid_argument("air_pool: average mode requires p = 1");
    }
    // Pre-processing at the devices: x -> x^p.
    std::vector<std::vector<double>> tx = batch.features;
    if (cfg.p != 1.0) {
        for (auto& v : tx) {
            for (auto& x : v) x = std::pow(x, cfg.p);
        }
    }
    auto out = mac_superpose(mac, tx, rng);
    // Post-processing at the server: clamp, p-th root, average scaling.
    for (auto& y : out.received) {
        if (y < 0.0) y = 0.0;
        if (cfg.p != 1.0) y = std::pow(y, 1.0 / cfg.p);
        if (cfg.mode == PoolingMode::average) {
            y /= static_cast<double>(batch.device_count());
        }
    }
    return out.received;
}

double max_approx_error(const FeatureBatch& batch, double p) {
    batch.check();
    if (p < 1.0) throw std::invalid_argument("max_approx_error: p must be >= 1");
    const std::size_t d = batch.dimension();
    double total = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
        double mx = 0.0;
        for (const auto& f : batch.features) mx = std::max(mx, f[i]);
        double pooled;
        if (mx == 0.0) {
            pooled = 0.0;
        } else {
            // Factor out the max for numerical stability at large p.
            double s = 0.0;
            for (const auto& f : batch.features) s += std::pow(f[i] / mx, p);
            pooled = mx * std::pow(s, 1.0 / p);
        }
        total += std::abs(pooled - mx);
    }
    return total / static_cast<double>(d);
}

std::vector<double> feel_round_pa(const FeelRound& round) {
    if (round.updates.empty()) throw std::invalid_argument("feel_round_pa: no updates");
    const std::size_t d = round.updates.front().size();
    std::vector<double> mean(d, 0.0);
    for (const auto& u : round.updates) {
        if (u.size() != d) throw std::invalid_argument("feel_round_pa: dimension mismatch");
        for (std::size_t i = 0; i < d; ++i) mean[i] += u[i];
    }
    for (auto& v : mean) v /= static_cast<double>(round.updates.size());
    return mean;
}

std::vector<double> feel_round_obda(const FeelRound& round,
                                    const chan::GaussianMAC& mac,
                                    sim::RngStream& rng) {
    if (round.updates.empty()) throw std::invalid_argument("feel_round_obda: no updates");
    std::vector<std::vector<double>> signs = round.updates;
    for (auto& v : signs) {
        for (auto& x : v) x = x >= 0.0 ? 1.0 : -1.0;  // sign(0) = +1
    }
    auto out = mac_superpose(mac, signs, rng);
    for (auto& y : out.received) {
        y = (y >= 0.0 ? 1.0 : -1.0) * round.learning_rate;
    }
    return out.received;
}

Codebook train_codebook(const std::vector<std::vector<double>>& samples,
                        std::size_t block_len, std::size_t codebook_bits,
                        std::uint64_t seed, std::size_t iterations) {
    if (block_len == 0) throw std::invalid_argument("train_codebook: block_len 0");
    std::vector<std::vector<double>> blocks;
    for (const auto& s : samples) {
        if (s.size() % block_len != 0) {
            throw std::invalid_argument("train_codebook: dimension not divisible by Q");
        }
        for (std::size_t off = 0; off + block_len <= s.size(); off += block_len) {
            blocks.emplace_back(s.begin() + static_cast<std::ptrdiff_t>(off),
                                s.begin() + static_cast<std::ptrdiff_t>(off + block_len));
        }
    }
    if (blocks.empty()) throw std::invalid_argument("train_codebook: no sample blocks");

    const std::size_t k = std::size_t{1} << codebook_bits;
    sim::RngStream rng(seed, "codebook");
    Codebook cb;
    cb.block_len = block_len;
    cb.centroids.resize(k);
    for (auto& c : cb.centroids) c = blocks[rng.uniform_int(blocks.size())];

    auto nearest = [&](const std::vector<double>& b) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c) {
            double dd = 0.0;
            for (std::size_t i = 0; i < block_len; ++i) {
                double diff = b[i] - cb.centroids[c][i];
                dd += diff * diff;
            }
            if (dd < best_d) {
                best_d = dd;
                best = c;
            }
        }
        return best;
    };

    for (std::size_t it = 0; it < iterations; ++it) {
        std::vector<std::vector<double>> sums(k, std::vector<double>(block_len, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (const auto& b : blocks) {
            std::size_t c = nearest(b);
            for (std::size_t i = 0; i < block_len; ++i) sums[c][i] += b[i];
            ++counts[c];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) {
                // Reseed an empty cluster deterministically.
                cb.centroids[c] = blocks[rng.uniform_int(blocks.size())];
                continue;
            }
            for (std::size_t i = 0; i < block_len; ++i) {
                cb.centroids[c][i] = sums[c][i] / static_cast<double>(counts[c]);
            }
        }
    }
    return cb;
}

std::vector<std::size_t> quantize_vq(const std::vector<double>& update,
                                     const Codebook& codebook) {
    if (codebook.block_len == 0 || update.size() % codebook.block_len != 0) {
        throw std::invalid_argument("quantize_vq: dimension not divisible by Q");
    }
    std::vector<std::size_t> indices;
    for (std::size_t off = 0; off < update.size(); off += codebook.block_len) {
        std::size_t best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < codebook.centroids.size(); ++c) {
            double dd = 0.0;
            for (std::size_t i = 0; i < codebook.block_len; ++i) {
                double diff = update[off + i] - codebook.centroids[c][i];
                dd += diff * diff;
            }
            if (dd < best_d) {  // strict keeps ties at the lowest index
                best_d = dd;
                best = c;
            }
        }
        indices.push_back(best);
    }
    return indices;
}

std::vector<double> dequantize_vq(const std::vector<std::size_t>& indices,
                                  const Codebook& codebook) {
    std::vector<double> out;
    out.reserve(indices.size() * codebook.block_len);
    for (std::size_t idx : indices) {
        const auto& c = codebook.centroids.at(idx);
        out.insert(out.end(), c.begin(), c.end());
    }
    return out;
}

std::vector<double> gdoac_round(const std::vector<std::vector<std::size_t>>& indices,
                                const Codebook& codebook, const GdoacConfig& cfg,
                                sim::RngStream& rng) {
    if (indices.empty()) throw std::invalid_argument("gdoac_round: no devices");
    const std::size_t blocks = indices.front().size();
    for (const auto& dev : indices) {
        if (dev.size() != blocks) {
            throw std::invalid_argument("gdoac_round: block count mismatch");
        }
    }
    const std::size_t k = codebook.centroids.size();
    const auto devices = static_cast<double>(indices.size());
    std::vector<double> aggregate;
    aggregate.reserve(blocks * codebook.block_len);

    // Per-codeword signatures for the matched-filter detector.
    std::size_t sig_len = cfg.signature_len ? cfg.signature_len : k;
    std::vector<std::vector<double>> signatures;
    if (cfg.detector == GdoacDetector::matched_filter) {
        if (!cfg.signatures.empty()) {
            signatures = cfg.signatures;
            sig_len = signatures.front().size();
        } else {
            sim::RngStream sig_rng(cfg.signature_seed, "gdoac_signatures");
            signatures.resize(k, std::vector<double>(sig_len));
            for (auto& s : signatures) {
                for (auto& v : s) v = sig_rng.normal();
            }
        }
    }

    for (std::size_t b = 0; b < blocks; ++b) {
        std::vector<double> counts(k, 0.0);
        if (cfg.detector == GdoacDetector::genie) {
            for (const auto& dev : indices) counts[dev[b]] += 1.0;
        } else {
            // Superpose the active signatures over the MAC, then count by
            // correlating and rounding.
            std::vector<std::vector<double>> tx;
            for (const auto& dev : indices) tx.push_back(signatures[dev[b]]);
            chan::GaussianMAC mac;
            mac.device_count = indices.size();
            mac.noise_var = cfg.signature_noise_var;
            auto rx = mac_superpose(mac, tx, rng);
            for (std::size_t c = 0; c < k; ++c) {
                double dot = 0.0, norm2 = 0.0;
                for (std::size_t i = 0; i < sig_len; ++i) {
                    dot += rx.received[i] * signatures[c][i];
                    norm2 += signatures[c][i] * signatures[c][i];
                }
                counts[c] = std::max(0.0, std::round(dot / norm2));
            }
        }
        for (std::size_t i = 0; i < codebook.block_len; ++i) {
            double sum = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
                if (counts[c] != 0.0) sum += counts[c] * codebook.centroids[c][i];
            }
            aggregate.push_back(sum / devices);
        }
    }
    return aggregate;
}

FeelCurve train_centralized(const FeelTaskConfig& task, std::uint64_t seed) {
    LogisticData data = make_data(task, seed);
    std::vector<double> w(task.dimension, 0.0);
    FeelCurve curve;
    for (std::size_t r = 0; r < task.rounds; ++r) {
        std::vector<double> g(task.dimension, 0.0);
        for (std::size_t n = 0; n < task.devices; ++n) {
            auto gn = local_gradient(data, n, w);
            for (std::size_t j = 0; j < w.size(); ++j) g[j] += gn[j];
        }
        for (std::size_t j = 0; j < w.size(); ++j) {
            w[j] -= task.learning_rate * g[j] / static_cast<double>(task.devices);
        }
        auto [loss, acc] = global_loss_acc(data, w);
        curve.loss.push_back(loss);
        curve.accuracy.push_back(acc);
    }
    return curve;
}

FeelCurve train_feel(const FeelTaskConfig& task, FeelScheme scheme,
                     std::uint64_t seed) {
    LogisticData data = make_data(task, seed);
    std::vector<double> w(task.dimension, 0.0);
    FeelCurve curve;
    sim::RngStream rng(seed, "feel_round");
    chan::GaussianMAC noiseless;
    noiseless.device_count = task.devices;

    Codebook codebook;
    bool codebook_ready = false;
    std::vector<std::vector<double>> warmup_samples;

    for (std::size_t r = 0; r < task.rounds; ++r) {
        FeelRound round;
        round.learning_rate = task.learning_rate;
        for (std::size_t n = 0; n < task.devices; ++n) {
            round.updates.push_back(local_gradient(data, n, w));
        }

        std::vector<double> aggregate;
        if (scheme == FeelScheme::PA) {
            aggregate = feel_round_pa(round);
            for (auto& v : aggregate) v *= task.learning_rate;
        } else if (scheme == FeelScheme::OBDA) {
            round.learning_rate =
                task.obda_learning_rate / std::sqrt(1.0 + static_cast<double>(r));
            aggregate = feel_round_obda(round, noiseless, rng);
        } else {
            // Updates are normalized by a per-round global scale before
            // quantization so a fixed codebook covers every round.
            double scale = 0.0;
            for (const auto& u : round.updates) scale += l2_norm(u);
            scale /= static_cast<double>(task.devices) *
                     std::sqrt(static_cast<double>(task.dimension));
            if (scale <= 0.0) scale = 1.0;
            std::vector<std::vector<double>> normalized = round.updates;
            for (auto& u : normalized) {
                for (auto& v : u) v /= scale;
            }
            if (!codebook_ready) {
                warmup_samples.insert(warmup_samples.end(), normalized.begin(),
                                      normalized.end());
                if (r + 1 >= task.warmup_rounds) {
                    codebook = train_codebook(warmup_samples, task.block_len,
                                              task.codebook_bits, seed);
                    codebook_ready = true;
                }
                aggregate = feel_round_pa(round);  // warm-up rounds use PA
            } else {
                std::vector<std::vector<std::size_t>> indices;
                for (const auto& u : normalized) {
                    indices.push_back(quantize_vq(u, codebook));
                }
                GdoacConfig gcfg;
                gcfg.detector = task.detector;
                aggregate = gdoac_round(indices, codebook, gcfg, rng);
                for (auto& v : aggregate) v *= scale;
            }
            for (auto& v : aggregate) v *= task.learning_rate;
        }

        for (std::size_t j = 0; j < w.size(); ++j) w[j] -= aggregate[j];
        auto [loss, acc] = global_loss_acc(data, w);
        curve.loss.push_back(loss);
        curve.accuracy.push_back(acc);
    }
    return curve;
}

}  // namespace goalsim::air
