#include <stdexcept>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "doctest.h"
#include "goalsim/air/aircomp.hpp"

using namespace goalsim;

namespace {

chan::GaussianMAC clean_mac(std::size_t n) {
    chan::GaussianMAC mac;
    mac.device_count = n;
    return mac;
}

}  // namespace

TEST_CASE("feature batches must be nonnegative and rectangular") {
    air::FeatureBatch bad;
    bad.features = {{1.0, -0.5}};
    CHECK_THROWS_AS(bad.check(), std::invalid_argument);
    air::FeatureBatch ragged;
    ragged.features = {{1.0, 2.0}, {1.0}};
    CHECK_THROWS_AS(ragged.check(), std::invalid_argument);
    air::FeatureBatch ok;
    ok.features = {{1.0, 2.0}, {0.0, 3.0}};
    CHECK_NOTHROW(ok.check());
}

TEST_CASE("noiseless average pooling is the exact arithmetic mean") {
    air::FeatureBatch batch;
    batch.features = {{1.0, 4.0}, {2.0, 0.0}, {3.0, 2.0}};
    sim::RngStream rng(61, "pool_avg");
    auto out = air::air_pool(batch, {1.0, air::PoolingMode::average},
                             clean_mac(3), rng);
    REQUIRE(out.size() == 2);
    CHECK(out[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(out[1] == doctest::Approx(2.0).epsilon(1e-12));

    // Average mode is defined only for p = 1; the exponent p must be >= 1.
    CHECK_THROWS_AS(air::air_pool(batch, {2.0, air::PoolingMode::average},
                                  clean_mac(3), rng),
                    std::invalid_argument);
    CHECK_THROWS_AS(air::air_pool(batch, {0.5, air::PoolingMode::max_approx},
                                  clean_mac(3), rng),
                    std::invalid_argument);
}

TEST_CASE("large exponents drive the pooled value to the componentwise max") {
    air::FeatureBatch batch;
    batch.features = {{1.0, 0.2, 5.0}, {0.5, 3.0, 4.0}, {0.9, 2.9, 1.0}};
    // Features above 1 raised to the 64th power need an unconstrained budget.
    chan::GaussianMAC ideal = clean_mac(3);
    ideal.power_limit = std::numeric_limits<double>::infinity();
    double prev = 1e18;
    for (double p : {1.0, 2.0, 4.0, 8.0, 16.0, 64.0}) {
        double err = air::max_approx_error(batch, p);
        CHECK(err < prev);
        prev = err;
    }
    sim::RngStream rng(62, "pool_max");
    auto out = air::air_pool(batch, {64.0, air::PoolingMode::max_approx},
                             ideal, rng);
    CHECK(out[0] == doctest::Approx(1.0).epsilon(0.02));
    CHECK(out[1] == doctest::Approx(3.0).epsilon(0.02));
    CHECK(out[2] == doctest::Approx(5.0).epsilon(0.02));
}

TEST_CASE("two equal devices overshoot the max by exactly 2^(1/p) - 1") {
    air::FeatureBatch batch;
    batch.features = {{1.0}, {1.0}};
    CHECK(air::max_approx_error(batch, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(air::max_approx_error(batch, 4.0) ==
          doctest::Approx(std::pow(2.0, 0.25) - 1.0).epsilon(1e-12));
}

TEST_CASE("noisy pooled outputs are clamped to be nonnegative") {
    air::FeatureBatch batch;
    batch.features = {{0.01, 0.01, 0.01, 0.01}};
    chan::GaussianMAC mac = clean_mac(1);
    mac.noise_var = 100.0;
    sim::RngStream rng(63, "pool_clamp");
    for (int rep = 0; rep < 20; ++rep) {
        auto out = air::air_pool(batch, {2.0, air::PoolingMode::max_approx}, mac, rng);
        for (double v : out) CHECK(v >= 0.0);
    }
}

TEST_CASE("perfect aggregation averages the raw updates") {
    air::FeelRound round;
    round.updates = {{1.0, -2.0}, {3.0, 4.0}};
    auto out = air::feel_round_pa(round);
    CHECK(out == std::vector<double>{2.0, 1.0});
}

TEST_CASE("one-bit aggregation follows the sign majority") {
    air::FeelRound round;
    round.updates = {{2.0}, {-1.0}, {-1.0}};
    round.learning_rate = 0.25;
    sim::RngStream rng(64, "obda");
    auto out = air::feel_round_obda(round, clean_mac(3), rng);
    CHECK(out == std::vector<double>{-0.25});

    // sign(0) counts as +1, so a 0 vs -1 vote is a tie resolved upward.
    air::FeelRound tie;
    tie.updates = {{0.0}, {-1.0}};
    tie.learning_rate = 0.5;
    auto out2 = air::feel_round_obda(tie, clean_mac(2), rng);
    CHECK(out2 == std::vector<double>{0.5});
}

TEST_CASE("vector quantization picks the nearest centroid, lowest index first") {
    air::Codebook cb;
    cb.block_len = 2;
    cb.centroids = {{0.0, 0.0}, {1.0, 1.0}};
    auto idx = air::quantize_vq({0.9, 1.2, 0.1, -0.2}, cb);
    CHECK(idx == std::vector<std::size_t>{1, 0});
    CHECK(air::dequantize_vq(idx, cb) == std::vector<double>{1.0, 1.0, 0.0, 0.0});
    // Equidistant block keeps the lowest index.
    CHECK(air::quantize_vq({0.5, 0.5}, cb) == std::vector<std::size_t>{0});
    CHECK_THROWS_AS(air::quantize_vq({1.0, 2.0, 3.0}, cb), std::invalid_argument);
}

TEST_CASE("codebook training is deterministic and sized 2^J") {
    std::vector<std::vector<double>> samples;
    sim::RngStream rng(65, "cb");
    for (int i = 0; i < 40; ++i) {
        std::vector<double> s(10);
        for (auto& v : s) v = rng.normal();
        samples.push_back(s);
    }
    auto a = air::train_codebook(samples, 2, 3, 99);
    auto b = air::train_codebook(samples, 2, 3, 99);
    CHECK(a.block_len == 2);
    CHECK(a.centroids.size() == 8);
    REQUIRE(b.centroids.size() == 8);
    for (std::size_t i = 0; i < 8; ++i) CHECK(a.centroids[i] == b.centroids[i]);
    auto c = air::train_codebook(samples, 2, 3, 100);
    bool any_diff = false;
    for (std::size_t i = 0; i < 8; ++i) any_diff |= (a.centroids[i] != c.centroids[i]);
    CHECK(any_diff);
}

TEST_CASE("genie counting reproduces the average of the quantized updates") {
    air::Codebook cb;
    cb.block_len = 1;
    cb.centroids = {{-1.0}, {0.5}, {2.0}};
    std::vector<std::vector<double>> updates = {{0.4, 2.1}, {-0.9, 0.6}, {1.8, 1.9}};
    std::vector<std::vector<std::size_t>> indices;
    for (const auto& u : updates) indices.push_back(air::quantize_vq(u, cb));
    sim::RngStream rng(66, "genie");
    auto out = air::gdoac_round(indices, cb, {}, rng);

    air::FeelRound round;
    for (const auto& idx : indices) round.updates.push_back(air::dequantize_vq(idx, cb));
    auto oracle = air::feel_round_pa(round);
    REQUIRE(out.size() == oracle.size());
    for (std::size_t i = 0; i < out.size(); ++i) {
        CHECK(out[i] == doctest::Approx(oracle[i]).epsilon(1e-12));
    }
}

TEST_CASE("matched filtering with orthogonal signatures equals the genie") {
    air::Codebook cb;
    cb.block_len = 1;
    cb.centroids = {{-1.0}, {1.0}};
    std::vector<std::vector<std::size_t>> indices = {{0, 1}, {0, 1}, {1, 1}};
    sim::RngStream rng(67, "mf");
    auto genie = air::gdoac_round(indices, cb, {}, rng);
    air::GdoacConfig mf;
    mf.detector = air::GdoacDetector::matched_filter;
    mf.signatures = {{1.0, 0.0}, {0.0, 1.0}};
    auto filtered = air::gdoac_round(indices, cb, mf, rng);
    REQUIRE(filtered.size() == genie.size());
    for (std::size_t i = 0; i < genie.size(); ++i) {
        CHECK(filtered[i] == doctest::Approx(genie[i]).epsilon(1e-12));
    }
}

namespace {

air::FeelTaskConfig small_task() {
    air::FeelTaskConfig task;
    task.dimension = 10;
    task.devices = 10;
    task.samples_per_device = 30;
    task.rounds = 60;
    task.block_len = 5;
    task.codebook_bits = 5;
    task.warmup_rounds = 5;
    return task;
}

}  // namespace

TEST_CASE("perfect aggregation coincides with centralized gradient descent") {
    auto task = small_task();
    auto pa = air::train_feel(task, air::FeelScheme::PA, 7);
    auto central = air::train_centralized(task, 7);
    REQUIRE(pa.loss.size() == central.loss.size());
    for (std::size_t r = 0; r < pa.loss.size(); ++r) {
        CHECK(pa.loss[r] == doctest::Approx(central.loss[r]).epsilon(1e-12));
    }
}

TEST_CASE("one-bit aggregation still learns") {
    auto task = small_task();
    auto curve = air::train_feel(task, air::FeelScheme::OBDA, 7);
    REQUIRE(curve.loss.size() == task.rounds);
    CHECK(curve.loss.back() < curve.loss.front());
    CHECK(curve.accuracy.back() > 0.7);
}

TEST_CASE("quantized counting aggregation tracks perfect aggregation") {
    auto task = small_task();
    auto pa = air::train_feel(task, air::FeelScheme::PA, 7);
    auto gd = air::train_feel(task, air::FeelScheme::GDOAC, 7);
    CHECK(gd.loss.back() < gd.loss.front());
    CHECK(gd.loss.back() <= pa.loss.back() * 1.15);
}
