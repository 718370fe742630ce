#include <stdexcept>
#include <cmath>

#include "doctest.h"
#include "goalsim/metrics/timing.hpp"
#include "goalsim/sim/parallel.hpp"

using namespace goalsim;

namespace {

sim::SimTime at_seconds(double s) {
    return sim::SimTime{static_cast<std::uint64_t>(s * 1000.0)};
}

}  // namespace

TEST_CASE("latency is reception minus generation in seconds") {
    CHECK(metrics::latency({0.0, at_seconds(2), at_seconds(5), 0, 0.0}) == 3.0);
    CHECK(metrics::latency({0.0, at_seconds(4), at_seconds(4), 0, 0.0}) == 0.0);
    CHECK(metrics::latency({0.0, sim::SimTime{0}, sim::SimTime{1500}, 0, 0.0}) == 1.5);
}

TEST_CASE("aoi anchors on the freshest received record") {
    proc::History h;
    h.add({0.0, at_seconds(2), at_seconds(5), 0, 0.0});
    CHECK(metrics::aoi(h, at_seconds(7)) == 5.0);
    // At the reception instant the AoI drops to the latency.
    CHECK(metrics::aoi(h, at_seconds(5)) == 3.0);
    h.add({0.0, at_seconds(6), at_seconds(9), 0, 0.0});
    CHECK(metrics::aoi(h, at_seconds(10)) == 4.0);
    // Empty history: age since the configured prior timestamp.
    proc::History empty;
    CHECK(metrics::aoi(empty, at_seconds(3)) == 3.0);
}

TEST_CASE("aoi sawtooth grows with unit slope between receptions") {
    proc::History h;
    h.add({0.0, at_seconds(1), at_seconds(2), 0, 0.0});
    double a1 = metrics::aoi(h, at_seconds(3));
    double a2 = metrics::aoi(h, at_seconds(4.5));
    CHECK(a2 - a1 == doctest::Approx(1.5).epsilon(1e-12));
}

TEST_CASE("perfect fresh observation recovers the full estimation error") {
    proc::ProcessModel model = proc::Wiener{1.0, 0.0};
    proc::History h;
    h.add({1.0, at_seconds(0), at_seconds(0), 0, 0.0});
    double x_true = 2.5;
    proc::UpdateRecord fresh{x_true, at_seconds(4), at_seconds(4), 0, 0.0};
    double v = metrics::semantic_voi(model, h, fresh, x_true, at_seconds(4));
    CHECK(v == doctest::Approx((2.5 - 1.0) * (2.5 - 1.0)).epsilon(1e-12));
}

TEST_CASE("a duplicate update has zero semantic value") {
    proc::ProcessModel model = proc::Wiener{1.0, 0.0};
    proc::History h;
    proc::UpdateRecord rec{1.0, at_seconds(1), at_seconds(1), 0, 0.0};
    h.add(rec);
    CHECK(metrics::semantic_voi(model, h, rec, 3.0, at_seconds(2)) == 0.0);
}

TEST_CASE("ensemble-mean semantic VoI of fresh Wiener samples equals sigma2 Delta") {
    // Monte-Carlo over paths: pre-error is sigma2 * 4, post-error 0.
    proc::ProcessModel model = proc::Wiener{1.0, 0.0};
    sim::RngStream base(17, "svoi");
    auto vals = sim::ensemble_parallel(
        100000, base, [&](std::size_t, sim::RngStream& r) {
            proc::History h;
            h.add({0.0, at_seconds(0), at_seconds(0), 0, 0.0});
            double x = r.normal(0.0, 2.0);  // x(4) given x(0) = 0
            proc::UpdateRecord fresh{x, at_seconds(4), at_seconds(4), 0, 0.0};
            return metrics::semantic_voi(model, h, fresh, x, at_seconds(4));
        });
    CHECK(sim::mean_of(vals) == doctest::Approx(4.0).epsilon(0.01));
}

TEST_CASE("expected VoI closed form matches the nested Monte-Carlo oracle") {
    proc::ProcessModel model = proc::Wiener{1.0, 0.0};
    proc::History h;
    h.add({0.0, at_seconds(0), at_seconds(0), 0, 0.0});
    SUBCASE("noiseless: sigma2 times the age") {
        CHECK(metrics::expected_voi(model, h, at_seconds(4), 0.0) == 4.0);
        CHECK(metrics::expected_voi(model, h, at_seconds(0), 0.0) == 0.0);
        sim::RngStream rng(19, "evoi");
        auto mc = metrics::expected_voi_mc(model, h, at_seconds(4), 0.0, rng,
                                           {4096, 1});
        CHECK(std::abs(mc.estimate - 4.0) < 3.0 * mc.stderr);
    }
    SUBCASE("noisy: prior variance shrinks by the Kalman factor") {
        double v = 4.0, R = 2.0;
        CHECK(metrics::expected_voi(model, h, at_seconds(4), R) ==
              doctest::Approx(v * v / (v + R)).epsilon(1e-12));
        sim::RngStream rng(19, "evoi_noisy");
        auto mc = metrics::expected_voi_mc(model, h, at_seconds(4), R, rng,
                                           {4096, 64});
        CHECK(std::abs(mc.estimate - v * v / (v + R)) < 3.0 * mc.stderr + 0.02);
    }
    SUBCASE("uninformative observation is worthless") {
        double v = metrics::expected_voi(model, h, at_seconds(4), 1e6 * 4.0);
        CHECK(v < 0.01 * 4.0);
    }
}

TEST_CASE("noiseless Wiener expected VoI is a function of AoI alone") {
    proc::ProcessModel model = proc::Wiener{2.0, 0.0};
    // Two different histories with the same freshest generation time.
    proc::History a, b;
    a.add({5.0, at_seconds(3), at_seconds(3.5), 0, 0.0});
    b.add({-1.0, at_seconds(1), at_seconds(1), 0, 0.0});
    b.add({0.5, at_seconds(3), at_seconds(4), 0, 0.0});
    double t = 7.0;
    CHECK(metrics::expected_voi(model, a, at_seconds(t), 0.0) ==
          doctest::Approx(2.0 * metrics::aoi(a, at_seconds(t))).epsilon(1e-12));
    CHECK(metrics::expected_voi(model, a, at_seconds(t), 0.0) ==
          doctest::Approx(metrics::expected_voi(model, b, at_seconds(t), 0.0))
              .epsilon(1e-12));
}

TEST_CASE("stateful models break the AoI reduction") {
    // Equal AoI, different expected VoI: the OU posterior remembers how
    // many noisy samples it has seen.
    proc::ProcessModel model = proc::OrnsteinUhlenbeck{1.0, 0.0, 1.0};
    proc::History one, two;
    one.add({0.4, at_seconds(4), at_seconds(4), 0, 1.0});
    two.add({0.2, at_seconds(3.9), at_seconds(3.9), 0, 1.0});
    two.add({0.4, at_seconds(4), at_seconds(4), 0, 1.0});
    CHECK(metrics::aoi(one, at_seconds(5)) == metrics::aoi(two, at_seconds(5)));
    double v1 = metrics::expected_voi(model, one, at_seconds(5), 0.0);
    double v2 = metrics::expected_voi(model, two, at_seconds(5), 0.0);
    CHECK(std::abs(v1 - v2) > 1e-10);
}

TEST_CASE("Markov expected VoI is the MAP miss probability") {
    proc::FiniteMarkov m;
    m.P = {{0.7, 0.3}, {0.4, 0.6}};
    proc::History h;
    h.add({0.0, sim::SimTime{0}, sim::SimTime{0}, 0, 0.0});
    auto post = proc::markov_posterior(m, h, sim::SimTime{3});
    double expect = 1.0 - std::max(post[0], post[1]);
    CHECK(metrics::expected_voi(proc::ProcessModel{m}, h, sim::SimTime{3}, 0.0) ==
          doctest::Approx(expect).epsilon(1e-12));
    sim::RngStream rng(23, "markov_voi");
    auto mc = metrics::expected_voi_mc(proc::ProcessModel{m}, h, sim::SimTime{3},
                                       0.0, rng, {8192, 1});
    CHECK(std::abs(mc.estimate - expect) < 3.0 * mc.stderr);
}

TEST_CASE("pragmatic VoI vanishes when the action ignores the estimate") {
    proc::ProcessModel model = proc::Wiener{1.0, 0.0};
    proc::History h;
    h.add({0.0, at_seconds(0), at_seconds(0), 0, 0.0});
    proc::UpdateRecord y_new{5.0, at_seconds(4), at_seconds(4), 0, 0.0};
    metrics::Controller constant{
        [](double) { return 0.0; },
        [](double x, double a) { return (x - a) * (x - a); }};
    sim::RngStream rng(29, "pvoi_const");
    // High semantic value (estimate jumps from 0 to 5), zero pragmatic
    // value: identical rollouts under common random numbers.
    double v = metrics::pragmatic_voi(model, h, y_new, at_seconds(4), constant,
                                      {3, 1.0, 2000}, rng);
    CHECK(v == 0.0);
    CHECK_THROWS_AS(metrics::pragmatic_voi(model, h, y_new, at_seconds(4), constant,
                                           {0, 1.0, 10}, rng),
                    std::invalid_argument);
}

TEST_CASE("tracking control makes pragmatic and semantic VoI agree in mean") {
    proc::ProcessModel model = proc::Wiener{1.0, 0.0};
    proc::History h;
    h.add({0.0, at_seconds(0), at_seconds(0), 0, 0.0});
    proc::UpdateRecord y_new{1.5, at_seconds(4), at_seconds(4), 0, 0.0};
    metrics::Controller track{
        [](double est) { return est; },
        [](double x, double a) { return (x - a) * (x - a); }};
    sim::RngStream rng(31, "pvoi_track");
    double prag = metrics::pragmatic_voi(model, h, y_new, at_seconds(4), track,
                                         {1, 1.0, 100000}, rng);
    // Independent oracle: the mean semantic VoI with the true state drawn
    // from the posterior given the fuller history equals (1.5 - 0)^2 for
    // a martingale.
    sim::RngStream base(37, "svoi_oracle");
    auto sem = sim::ensemble_parallel(
        100000, base, [&](std::size_t, sim::RngStream& r) {
            double x = r.normal(1.5, 0.0);
            double x1 = x + r.normal();  // one environment step later
            double pre = (x1 - 0.0) * (x1 - 0.0);
            double post = (x1 - 1.5) * (x1 - 1.5);
            return pre - post;
        });
    CHECK(prag == doctest::Approx(sim::mean_of(sem)).epsilon(0.04));
}

TEST_CASE("an update that flips a bang-bang controller has positive value") {
    proc::ProcessModel model = proc::Wiener{0.01, 0.0};
    proc::History h;
    h.add({-0.5, at_seconds(0), at_seconds(0), 0, 0.0});
    proc::UpdateRecord y_new{0.5, at_seconds(1), at_seconds(1), 0, 0.0};
    metrics::Controller bang{
        [](double est) { return est > 0.0 ? 1.0 : -1.0; },
        [](double x, double a) { return (x > 0.0 ? 1.0 : -1.0) == a ? 0.0 : 1.0; }};
    sim::RngStream rng(41, "pvoi_bang");
    const std::size_t n = 5000;
    double v = metrics::pragmatic_voi(model, h, y_new, at_seconds(1), bang,
                                      {1, 0.1, n}, rng);
    // CI excludes zero: per-rollout differences are in {-1, 0, 1}.
    CHECK(v > 3.0 / std::sqrt(static_cast<double>(n)));
}
