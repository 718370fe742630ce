#include "goalsim/chan/channels.hpp"

#include <cmath>
#include <stdexcept>

namespace goalsim::chan {

void LinkModel::check() const {
    if (base_delay_ticks < 0.0) throw std::invalid_argument("LinkModel: negative delay");
    if (exp_rate < 0.0) throw std::invalid_argument("LinkModel: negative rate");
    if (erasure_prob < 0.0 || erasure_prob >= 1.0) {
        throw std::invalid_argument("LinkModel: erasure_prob out of [0,1)");
    }
}

std::optional<sim::SimTime> transmit(const LinkModel& link, sim::SimTime now,
                                     sim::RngStream& rng) {
    // Fixed draw count per call keeps traces aligned across branches.
    double u_erase = rng.uniform();
    double delay = link.base_delay_ticks;
    if (link.exp_rate > 0.0) delay += rng.exponential(link.exp_rate);
    if (u_erase < link.erasure_prob) return std::nullopt;
    auto ticks = static_cast<std::uint64_t>(std::llround(delay));
    return sim::SimTime{now.ticks + ticks};
}

void DiscreteChannel::check() const {
    if (q < 2) throw std::invalid_argument("DiscreteChannel: q < 2");
    if (symbol_error_prob < 0.0 || symbol_error_prob >= 1.0) {
        throw std::invalid_argument("DiscreteChannel: error prob out of [0,1)");
    }
    if (uses_per_message == 0) {
        throw std::invalid_argument("DiscreteChannel: zero channel uses");
    }
}

std::vector<std::uint32_t> qsc_transmit(const DiscreteChannel& channel,
                                        const std::vector<std::uint32_t>& symbols,
                                        sim::RngStream& rng) {
    channel.check();
    std::vector<std::uint32_t> out;
    out.reserve(symbols.size());
    for (std::uint32_t s : symbols) {
        if (s >= channel.q) {
            throw std::invalid_argument("qsc_transmit: symbol out of alphabet");
        }
        if (rng.bernoulli(channel.symbol_error_prob)) {
            // Uniform over the q-1 wrong symbols.
            auto offset = static_cast<std::uint32_t>(
                rng.uniform_int(channel.q - 1) + 1);
            out.push_back((s + offset) % channel.q);
        } else {
            out.push_back(s);
        }
    }
    return out;
}

void GaussianMAC::check() const {
    if (noise_var < 0.0) throw std::invalid_argument("GaussianMAC: negative noise");
    if (power_limit <= 0.0) throw std::invalid_argument("GaussianMAC: power_limit <= 0");
    if (!gains.empty() && gains.size() != device_count) {
        throw std::invalid_argument("GaussianMAC: gains size mismatch");
    }
}

MacOutput mac_superpose(const GaussianMAC& mac,
                        const std::vector<std::vector<double>>& vectors,
                        sim::RngStream& rng) {
    mac.check();
    if (vectors.empty()) throw std::invalid_argument("mac_superpose: no vectors");
    const std::size_t dim = vectors.front().size();
    for (const auto& v : vectors) {
        if (v.size() != dim) throw std::invalid_argument("mac_superpose: dimension mismatch");
    }

    MacOutput out;
    out.received.assign(dim, 0.0);
    for (std::size_t n = 0; n < vectors.size(); ++n) {
        if (!mac.included(n)) {
            out.excluded_devices.push_back(n);
            continue;
        }
        // Inversion scaling cancels the gain exactly; enforce the mean
        // transmit power limit after scaling.
        double h = mac.gain(n);
        double power = 0.0;
        for (double x : vectors[n]) power += (x / h) * (x / h);
        power /= static_cast<double>(dim);
        if (power > mac.power_limit) {
            throw std::invalid_argument("mac_superpose: per-device power limit exceeded");
        }
        for (std::size_t i = 0; i < dim; ++i) out.received[i] += vectors[n][i];
    }
    if (mac.noise_var > 0.0) {
        double sd = std::sqrt(mac.noise_var);
        for (std::size_t i = 0; i < dim; ++i) out.received[i] += rng.normal(0.0, sd);
    }
    return out;
}

}  // namespace goalsim::chan
