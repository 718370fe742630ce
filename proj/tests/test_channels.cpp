#include <stdexcept>
#include <array>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "goalsim/chan/channels.hpp"

using namespace goalsim;

TEST_CASE("link model validation") {
    chan::LinkModel bad_delay{-1.0, 0.0, 0.0};
    CHECK_THROWS_AS(bad_delay.check(), std::invalid_argument);
    chan::LinkModel bad_erasure{0.0, 0.0, 1.0};
    CHECK_THROWS_AS(bad_erasure.check(), std::invalid_argument);
    chan::LinkModel ok{2.0, 0.5, 0.3};
    CHECK_NOTHROW(ok.check());
}

TEST_CASE("deterministic link delivers after the fixed delay") {
    chan::LinkModel link{5.0, 0.0, 0.0};
    sim::RngStream rng(1, "link");
    for (int i = 0; i < 10; ++i) {
        auto t = chan::transmit(link, sim::SimTime{100}, rng);
        REQUIRE(t.has_value());
        CHECK(t->ticks == 105);
    }
}

TEST_CASE("erasure frequency matches the configured probability") {
    chan::LinkModel link{1.0, 0.0, 0.3};
    sim::RngStream rng(2, "erase");
    const int n = 100000;
    int erased = 0;
    for (int i = 0; i < n; ++i) {
        if (!chan::transmit(link, sim::SimTime{0}, rng)) ++erased;
    }
    double rate = static_cast<double>(erased) / n;
    double se = std::sqrt(0.3 * 0.7 / n);
    CHECK(std::abs(rate - 0.3) < 3.0 * se);
}

TEST_CASE("shifted-exponential delay has the right mean") {
    chan::LinkModel link{10.0, 0.5, 0.0};  // mean extra delay 2 ticks
    sim::RngStream rng(3, "expdelay");
    const int n = 100000;
    double sum = 0.0;
    for (int i = 0; i < n; ++i) {
        auto t = chan::transmit(link, sim::SimTime{0}, rng);
        REQUIRE(t.has_value());
        sum += static_cast<double>(t->ticks);
    }
    CHECK(sum / n == doctest::Approx(12.0).epsilon(0.02));
}

TEST_CASE("transmit consumes the same draws whether or not it erases") {
    // Keeps paired configurations on common random numbers.
    chan::LinkModel lossy{4.0, 0.25, 0.9};
    chan::LinkModel clean{4.0, 0.25, 0.0};
    sim::RngStream a(7, "paired");
    sim::RngStream b(7, "paired");
    for (int i = 0; i < 50; ++i) {
        chan::transmit(lossy, sim::SimTime{0}, a);
        chan::transmit(clean, sim::SimTime{0}, b);
    }
    CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("discrete channel validation") {
    chan::DiscreteChannel bad_q{1, 0.0, 1};
    CHECK_THROWS_AS(bad_q.check(), std::invalid_argument);
    chan::DiscreteChannel bad_p{2, 1.0, 1};
    CHECK_THROWS_AS(bad_p.check(), std::invalid_argument);
    chan::DiscreteChannel bad_uses{2, 0.0, 0};
    CHECK_THROWS_AS(bad_uses.check(), std::invalid_argument);
}

TEST_CASE("noiseless symmetric channel is the identity") {
    chan::DiscreteChannel ch{4, 0.0, 1};
    sim::RngStream rng(5, "qsc0");
    std::vector<std::uint32_t> in{0, 3, 2, 1, 1, 0};
    CHECK(chan::qsc_transmit(ch, in, rng) == in);
    CHECK_THROWS_AS(chan::qsc_transmit(ch, {4}, rng), std::invalid_argument);
}

TEST_CASE("symbol errors occur at the configured rate, uniformly") {
    chan::DiscreteChannel ch{4, 0.25, 1};
    sim::RngStream rng(6, "qsc");
    const int n = 100000;
    std::vector<std::uint32_t> in(n, 2);
    auto out = chan::qsc_transmit(ch, in, rng);
    int errors = 0;
    std::array<int, 4> counts{};
    for (auto s : out) {
        if (s != 2) ++errors;
        ++counts[s];
    }
    double rate = static_cast<double>(errors) / n;
    CHECK(std::abs(rate - 0.25) < 3.0 * std::sqrt(0.25 * 0.75 / n));
    // The three wrong symbols are equally likely: chi-square, 2 dof,
    // 0.1% critical value 13.82.
    double expected = errors / 3.0;
    double chi2 = 0.0;
    for (std::size_t s = 0; s < 4; ++s) {
        if (s == 2) continue;
        chi2 += (counts[s] - expected) * (counts[s] - expected) / expected;
    }
    CHECK(chi2 < 13.82);
}

TEST_CASE("binary channel at crossover one half carries no information") {
    chan::DiscreteChannel ch{2, 0.5, 1};
    sim::RngStream rng(8, "qsc_half");
    const int n = 200000;
    std::vector<std::uint32_t> in(n);
    for (auto& s : in) s = static_cast<std::uint32_t>(rng.uniform_int(2));
    auto out = chan::qsc_transmit(ch, in, rng);
    std::array<std::array<double, 2>, 2> joint{};
    for (int i = 0; i < n; ++i) joint[in[i]][out[i]] += 1.0 / n;
    double mi = 0.0;
    for (int x = 0; x < 2; ++x) {
        double px = joint[x][0] + joint[x][1];
        for (int y = 0; y < 2; ++y) {
            double py = joint[0][y] + joint[1][y];
            if (joint[x][y] > 0.0) {
                mi += joint[x][y] * std::log2(joint[x][y] / (px * py));
            }
        }
    }
    CHECK(mi < 0.01);
}

TEST_CASE("noiseless MAC adds the raw vectors despite unequal gains") {
    chan::GaussianMAC mac;
    mac.device_count = 2;
    mac.gains = {2.0, 0.5};
    sim::RngStream rng(9, "mac");
    auto out = chan::mac_superpose(mac, {{1.0, 2.0}, {3.0, 4.0}}, rng);
    REQUIRE(out.received.size() == 2);
    CHECK(out.received[0] == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(out.received[1] == doctest::Approx(6.0).epsilon(1e-12));
    CHECK(out.excluded_devices.empty());
}

TEST_CASE("MAC noise has the configured variance") {
    chan::GaussianMAC mac;
    mac.device_count = 1;
    mac.noise_var = 2.0;
    sim::RngStream rng(10, "mac_noise");
    const std::size_t dim = 100000;
    auto out = chan::mac_superpose(mac, {std::vector<double>(dim, 0.0)}, rng);
    double sum = 0.0, sq = 0.0;
    for (double v : out.received) {
        sum += v;
        sq += v * v;
    }
    double mean = sum / dim;
    double var = sq / dim - mean * mean;
    CHECK(var == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("truncated inversion drops weak devices") {
    chan::GaussianMAC mac;
    mac.device_count = 2;
    mac.gains = {0.1, 1.0};
    mac.inversion_threshold = 0.5;
    sim::RngStream rng(11, "mac_trunc");
    auto out = chan::mac_superpose(mac, {{7.0}, {3.0}}, rng);
    CHECK(out.received[0] == 3.0);
    CHECK(out.excluded_devices == std::vector<std::size_t>{0});
}

TEST_CASE("MAC rejects power violations and shape mismatches") {
    chan::GaussianMAC mac;
    mac.device_count = 1;
    mac.gains = {0.001};
    mac.power_limit = 1.0;
    mac.inversion_threshold = 0.0;
    sim::RngStream rng(12, "mac_err");
    // Inversion by a tiny gain blows the mean power budget.
    CHECK_THROWS_AS(chan::mac_superpose(mac, {{1.0}}, rng), std::invalid_argument);

    chan::GaussianMAC plain;
    plain.device_count = 2;
    CHECK_THROWS_AS(chan::mac_superpose(plain, {{1.0}, {1.0, 2.0}}, rng),
                    std::invalid_argument);

    chan::GaussianMAC bad;
    bad.device_count = 2;
    bad.gains = {1.0};
    CHECK_THROWS_AS(bad.check(), std::invalid_argument);
}
