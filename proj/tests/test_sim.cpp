#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "doctest.h"
#include "goalsim/sim/csv.hpp"
#include "goalsim/sim/kernel.hpp"
#include "goalsim/sim/parallel.hpp"
#include "goalsim/sim/rng.hpp"
#include "goalsim/sim/time.hpp"

using namespace goalsim;

TEST_CASE("events fire in time order regardless of insertion order") {
    sim::Kernel k;
    std::vector<int> fired;
    k.schedule(sim::SimTime{5}, "a", [&] { fired.push_back(5); });
    k.schedule(sim::SimTime{3}, "b", [&] { fired.push_back(3); });
    k.run_until(sim::SimTime{10});
    CHECK(fired == std::vector<int>{3, 5});
}

TEST_CASE("simultaneous events fire in insertion order") {
    sim::Kernel k;
    std::vector<int> fired;
    k.schedule(sim::SimTime{7}, "first", [&] { fired.push_back(1); });
    k.schedule(sim::SimTime{7}, "second", [&] { fired.push_back(2); });
    auto trace = k.run_until(sim::SimTime{7});
    CHECK(fired == std::vector<int>{1, 2});
    REQUIRE(trace.size() == 2);
    CHECK(trace[0].seq < trace[1].seq);
}

TEST_CASE("scheduling in the past is rejected") {
    sim::Kernel k;
    k.schedule(sim::SimTime{4}, "x", [] {});
    k.run_until(sim::SimTime{4});
    CHECK_THROWS_AS(k.schedule(sim::SimTime{2}, "late", [] {}),
                    std::invalid_argument);
}

TEST_CASE("run_until on an empty queue just advances the clock") {
    sim::Kernel k;
    auto trace = k.run_until(sim::SimTime{10});
    CHECK(trace.empty());
    CHECK(k.now() == sim::SimTime{10});
}

TEST_CASE("trace order is (time, seq)") {
    sim::Kernel k;
    k.schedule(sim::SimTime{1}, "a", [] {});
    k.schedule(sim::SimTime{1}, "b", [] {});
    k.schedule(sim::SimTime{3}, "c", [] {});
    auto trace = k.run_until(sim::SimTime{5});
    REQUIRE(trace.size() == 3);
    CHECK(trace[0].tag == "a");
    CHECK(trace[1].tag == "b");
    CHECK(trace[2].tag == "c");
    CHECK(trace[0].seq == 0);
    CHECK(trace[1].seq == 1);
}

TEST_CASE("identical substream names give identical sequences") {
    sim::RngRoot root(7);
    auto a = root.substream("noise");
    auto b = root.substream("noise");
    for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("different substream names are uncorrelated") {
    sim::RngRoot root(7);
    auto a = root.substream("noise");
    auto b = root.substream("arrivals");
    const std::size_t n = 100000;
    double sa = 0, sb = 0, sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double x = a.uniform(), y = b.uniform();
        sa += x;
        sb += y;
        sab += x * y;
        saa += x * x;
        sbb += y * y;
    }
    double nd = static_cast<double>(n);
    double cov = sab / nd - (sa / nd) * (sb / nd);
    double corr = cov / std::sqrt((saa / nd - (sa / nd) * (sa / nd)) *
                                  (sbb / nd - (sb / nd) * (sb / nd)));
    CHECK(std::abs(corr) < 0.01);
}

TEST_CASE("different root seeds give different sequences") {
    sim::RngStream a(1, "s");
    sim::RngStream b(2, "s");
    CHECK(a.next_u64() != b.next_u64());
}

TEST_CASE("normal draws match standard moments") {
    sim::RngStream rng(11, "normal");
    const std::size_t n = 200000;
    double sum = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double x = rng.normal();
        sum += x;
        sq += x * x;
    }
    double mean = sum / static_cast<double>(n);
    double var = sq / static_cast<double>(n) - mean * mean;
    // 3 standard errors for the mean, generous band for the variance.
    CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(n)));
    CHECK(var == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("serial and parallel ensembles are bit-identical") {
    sim::RngStream base(3, "ens");
    auto fn = [](std::size_t, sim::RngStream& r) {
        double s = 0.0;
        for (int i = 0; i < 50; ++i) s += r.normal();
        return s;
    };
    auto a = sim::ensemble_serial(10000, base, fn);
    auto b = sim::ensemble_parallel(10000, base, fn);
    CHECK(a == b);
}

TEST_CASE("tick conversion is exact for integer milliseconds") {
    sim::TickRate tick;  // 1 ms
    CHECK(tick.to_seconds(sim::SimTime{1500}) == 1.5);
    CHECK(tick.to_seconds(sim::SimTime{0}) == 0.0);
    sim::TickRate coarse{1, 4};
    CHECK(coarse.to_seconds(sim::SimTime{3}) == 0.75);
}

TEST_CASE("format_double round trips") {
    for (double x : {0.1, 1.0 / 3.0, 1e-300, 12345.678901234567, -0.0, 2.0}) {
        double back = 0.0;
        std::sscanf(sim::format_double(x).c_str(), "%lf", &back);
        CHECK(back == x);
    }
}
