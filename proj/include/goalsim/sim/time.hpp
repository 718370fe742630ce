#pragma once

#include <compare>
#include <cstdint>

namespace goalsim::sim {

// Simulation time in integer ticks. Conversion to seconds uses the
// configured rational tick duration, so the clock never drifts.
struct SimTime {
    std::uint64_t ticks = 0;

    auto operator<=>(const SimTime&) const = default;

    SimTime operator+(SimTime other) const { return {ticks + other.ticks}; }
    SimTime operator-(SimTime other) const { return {ticks - other.ticks}; }
};

// Seconds per tick as an exact rational. Default: 1 ms per tick.
struct TickRate {
    std::uint64_t num = 1;
    std::uint64_t den = 1000;

    double to_seconds(SimTime t) const {
        return static_cast<double>(t.ticks) * static_cast<double>(num) /
               static_cast<double>(den);
    }
    double to_seconds(std::uint64_t ticks) const {
        return to_seconds(SimTime{ticks});
    }
};

}  // namespace goalsim::sim
