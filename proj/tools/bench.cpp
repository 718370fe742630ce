// Times the serial reference ensemble against the OpenMP path on a
// Monte-Carlo tracking-error workload and checks bit-identical output.

#include <chrono>
#include <cstdio>
#include <cstdlib>

#include "goalsim/proc/process.hpp"
#include "goalsim/sim/parallel.hpp"

using namespace goalsim;

namespace {

double ou_terminal_error(std::size_t, sim::RngStream& rng) {
    proc::OrnsteinUhlenbeck ou{0.5, 0.0, 1.0};
    proc::ProcessModel model = ou;
    std::vector<sim::SimTime> grid;
    for (std::uint64_t k = 0; k < 512; ++k) grid.push_back(sim::SimTime{k * 10});
    auto path = proc::sample_path(model, grid, rng);
    // Squared error of the last-observation estimate one step ahead.
    double err = path.back() - path[path.size() - 2];
    return err * err;
}

}  // namespace

int main(int argc, char** argv) {
    std::size_t n = argc > 1 ? static_cast<std::size_t>(std::atoll(argv[1])) : 20000;
    sim::RngStream base(42, "bench");

    auto t0 = std::chrono::steady_clock::now();
    auto serial = sim::ensemble_serial(n, base, ou_terminal_error);
    auto t1 = std::chrono::steady_clock::now();
    auto parallel = sim::ensemble_parallel(n, base, ou_terminal_error);
    auto t2 = std::chrono::steady_clock::now();

    bool identical = serial == parallel;
    auto ms = [](auto a, auto b) {
        return std::chrono::duration<double, std::milli>(b - a).count();
    };
    std::printf("samples          %zu\n", n);
    std::printf("serial           %.1f ms\n", ms(t0, t1));
    std::printf("openmp           %.1f ms\n", ms(t1, t2));
    std::printf("speedup          %.2fx\n", ms(t0, t1) / ms(t1, t2));
    std::printf("bit-identical    %s\n", identical ? "yes" : "NO");
    std::printf("mean             %.6f\n", sim::mean_of(serial));
    return identical ? 0 : 1;
}
