#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "goalsim/chan/channels.hpp"
#include "goalsim/metrics/timing.hpp"
#include "goalsim/proc/process.hpp"
#include "goalsim/sim/kernel.hpp"

namespace goalsim::policy {

struct PeriodicPush {
    std::uint64_t interval_ticks = 1;
};

struct ThresholdPush {
    double threshold = 0.0;
};

struct AoIGreedyPull {
    std::vector<double> weights;  // empty = unit weights
};

struct VoIGreedyPull {};

struct RandomPull {};

using SchedulerPolicy =
    std::variant<PeriodicPush, ThresholdPush, AoIGreedyPull, VoIGreedyPull, RandomPull>;

bool is_push(const SchedulerPolicy& p);

// Sender-side push decision. Throws if given a pull policy.
bool decide_push(const SchedulerPolicy& policy, double local_value,
                 double last_sent_value, sim::SimTime t, sim::SimTime last_send,
                 bool has_sent);

struct PullInputs {
    const std::vector<proc::ProcessModel>& component_models;
    const std::vector<proc::History>& component_histories;
    const proc::SensorField& field;
    const std::vector<double>& sensor_aoi_seconds;
    sim::SimTime t;
    sim::TickRate tick;
};

// Per-sensor scores of the pull policy (AoI-weighted age or expected VoI).
std::vector<double> pull_scores(const SchedulerPolicy& policy, const PullInputs& in);

// Sensor to poll; ties break toward the lowest index. Throws if given a
// push policy.
int decide_pull(const SchedulerPolicy& policy, const PullInputs& in,
                sim::RngStream& rng);

struct TrackingConfig {
    std::vector<proc::ProcessModel> component_models;  // one per signal component
    proc::SensorField field;
    chan::LinkModel link;
    SchedulerPolicy policy;
    std::uint64_t epoch_ticks = 1;
    std::uint64_t duration_ticks = 0;
    std::uint64_t seed = 0;
    sim::TickRate tick;
};

struct TrackingEpochRow {
    sim::SimTime t;
    int chosen_sensor = -1;  // -1 when the policy is push-based
    std::vector<double> sensor_aoi;
    std::vector<double> sensor_expected_voi;
    std::vector<double> component_sq_error;
};

struct TrackingRunResult {
    std::vector<TrackingEpochRow> epochs;
    std::vector<int> pull_decisions;
    double mean_sq_error = 0.0;
    double mean_aoi = 0.0;
};

// Event-driven tracking loop: decision epochs every epoch_ticks, one pull
// in flight at a time, simultaneous pushes within an epoch collide and
// are erased. Metrics are recorded at each epoch from the second onward,
// before that epoch's transmissions are issued.
TrackingRunResult run_tracking_experiment(const TrackingConfig& config);

}  // namespace goalsim::policy
