#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "goalsim/sim/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace goalsim::sim {

// Monte-Carlo ensemble helpers. Each sample index gets its own forked
// stream, and results land in a preallocated slot, so the serial and
// OpenMP paths produce bit-identical output regardless of thread count.
// The serial path is the reference implementation; the parallel path is
// checked against it in the test suite and compared in the benchmark
// target.

template <typename Fn>
std::vector<double> ensemble_serial(std::size_t n, const RngStream& base, Fn&& fn) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        RngStream rng = base.fork(i);
        out[i] = fn(i, rng);
    }
    return out;
}

template <typename Fn>
std::vector<double> ensemble_parallel(std::size_t n, const RngStream& base, Fn&& fn) {
    std::vector<double> out(n);
#ifdef _OPENMP
#pragma omp parallel for schedule(static)
#endif
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
        RngStream rng = base.fork(static_cast<std::uint64_t>(i));
        out[static_cast<std::size_t>(i)] = fn(static_cast<std::size_t>(i), rng);
    }
    return out;
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

inline double variance_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

// Standard error of the ensemble mean.
inline double stderr_of(const std::vector<double>& v) {
    if (v.size() < 2) return 0.0;
    double var = variance_of(v);
    return var <= 0.0 ? 0.0
                      : std::sqrt(var / static_cast<double>(v.size()));
}

template <typename Fn>
double ensemble_mean(std::size_t n, const RngStream& base, Fn&& fn) {
    return mean_of(ensemble_parallel(n, base, fn));
}

}  // namespace goalsim::sim
