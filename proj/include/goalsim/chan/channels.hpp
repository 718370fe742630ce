#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "goalsim/sim/rng.hpp"
#include "goalsim/sim/time.hpp"

namespace goalsim::chan {

// Point-to-point link: fixed or shifted-exponential delay plus packet
// erasures. Delay parameters are in ticks.
struct LinkModel {
    double base_delay_ticks = 0.0;
    double exp_rate = 0.0;  // 0 = deterministic delay
    double erasure_prob = 0.0;

    void check() const;
};

// Delivery time for a packet sent at `now`, or nullopt when erased. The
// sender is not notified of erasures.
std::optional<sim::SimTime> transmit(const LinkModel& link, sim::SimTime now,
                                     sim::RngStream& rng);

// q-ary symmetric channel; errors are uniform over the q-1 wrong symbols.
struct DiscreteChannel {
    std::uint32_t q = 2;
    double symbol_error_prob = 0.0;
    std::uint32_t uses_per_message = 1;

    void check() const;
};

std::vector<std::uint32_t> qsc_transmit(const DiscreteChannel& channel,
                                        const std::vector<std::uint32_t>& symbols,
                                        sim::RngStream& rng);

// Gaussian multiple-access channel with truncated channel inversion:
// devices with |h_n| below the threshold are excluded from the sum.
struct GaussianMAC {
    std::size_t device_count = 1;
    std::vector<double> gains;  // empty = all ones
    double noise_var = 0.0;
    double power_limit = 1e18;
    double inversion_threshold = 0.0;

    void check() const;
    double gain(std::size_t n) const {
        return gains.empty() ? 1.0 : gains.at(n);
    }
    // Excluded set under truncated inversion is {n : |h_n| < threshold}.
    bool included(std::size_t n) const {
        double h = gain(n);
        return h != 0.0 && std::abs(h) >= inversion_threshold;
    }
};

struct MacOutput {
    std::vector<double> received;
    std::vector<std::size_t> excluded_devices;
};

// y = sum_n h_n s_n x_n + z with truncated-inversion scaling s_n = 1/h_n,
// so included devices contribute their raw vectors.
MacOutput mac_superpose(const GaussianMAC& mac,
                        const std::vector<std::vector<double>>& vectors,
                        sim::RngStream& rng);

}  // namespace goalsim::chan
