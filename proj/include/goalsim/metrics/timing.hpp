#pragma once

#include <functional>
#include <string>

#include "goalsim/proc/process.hpp"
#include "goalsim/sim/rng.hpp"
#include "goalsim/sim/time.hpp"

namespace goalsim::metrics {

enum class MetricKind { latency, aoi, voi_semantic, voi_pull, voi_pragmatic };

std::string to_string(MetricKind k);

struct MetricSample {
    sim::SimTime t;
    MetricKind kind;
    double value = 0.0;
    int sensor_id = 0;
};

// Update latency tau = r - g in seconds.
double latency(const proc::UpdateRecord& record, sim::TickRate tick = {});

// Age of information at time t: t minus the generation time of the
// freshest received record. Empty history falls back to t - prior_t0.
double aoi(const proc::History& history, sim::SimTime t, sim::TickRate tick = {},
           sim::SimTime prior_t0 = {});

// Genie-side VoI: error of the current estimate against ground truth,
// minus the error after also incorporating y_new. A y_new identical to an
// already-held record leaves the history unchanged (VoI 0).
double semantic_voi(const proc::ProcessModel& model, const proc::History& history,
                    const proc::UpdateRecord& y_new, double x_true, sim::SimTime t,
                    sim::TickRate tick = {});

// Receiver-side expected VoI of pulling a fresh sample at time t from a
// sensor with the given observation noise. Closed form for the Gaussian
// models (prior variance minus expected posterior variance) and for the
// noiseless Markov observation model.
double expected_voi(const proc::ProcessModel& model, const proc::History& history,
                    sim::SimTime t, double obs_noise_var, sim::TickRate tick = {});

struct NestedMcConfig {
    std::size_t outer = 256;
    std::size_t inner = 64;
};

struct NestedMcResult {
    double estimate = 0.0;
    double stderr = 0.0;
};

// Nested Monte-Carlo estimator of the same quantity; the general path
// when no closed form applies, and the independent oracle in tests.
NestedMcResult expected_voi_mc(const proc::ProcessModel& model,
                               const proc::History& history, sim::SimTime t,
                               double obs_noise_var, sim::RngStream& rng,
                               NestedMcConfig cfg = {}, sim::TickRate tick = {});

// Single-input controller acting on a scalar estimate; cost compares the
// true state with the taken action.
struct Controller {
    std::function<double(double estimate)> act;
    std::function<double(double x_true, double action)> cost;
};

struct PragmaticConfig {
    int horizon_steps = 1;      // > 0
    double step_seconds = 1.0;  // environment step between control actions
    std::size_t rollouts = 1000;
};

// Paired-rollout pragmatic VoI: expected cumulative control cost over the
// horizon without y_new minus with it, under common random numbers. The
// true continuation is sampled from the posterior given the fuller
// information set (history + y_new). Gaussian models only.
double pragmatic_voi(const proc::ProcessModel& model, const proc::History& history,
                     const proc::UpdateRecord& y_new, sim::SimTime t,
                     const Controller& controller, const PragmaticConfig& cfg,
                     sim::RngStream& rng, sim::TickRate tick = {});

}  // namespace goalsim::metrics
