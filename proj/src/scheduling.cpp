#include "goalsim/policy/scheduling.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace goalsim::policy {

bool is_push(const SchedulerPolicy& p) {
    return std::holds_alternative<PeriodicPush>(p) ||
           std::holds_alternative<ThresholdPush>(p);
}

bool decide_push(const SchedulerPolicy& policy, double local_value,
                 double last_sent_value, sim::SimTime t, sim::SimTime last_send,
                 bool has_sent) {
    if (const auto* pp = std::get_if<PeriodicPush>(&policy)) {
        if (pp->interval_ticks == 0) throw std::invalid_argument("PeriodicPush: interval 0");
        if (!has_sent) return true;
        return t.ticks - last_send.ticks >= pp->interval_ticks;
    }
    if (const auto* tp = std::get_if<ThresholdPush>(&policy)) {
        if (!has_sent) return true;
        return std::abs(local_value - last_sent_value) >= tp->threshold;
    }
    throw std::invalid_argument("decide_push: pull policy passed");
}

std::vector<double> pull_scores(const SchedulerPolicy& policy, const PullInputs& in) {
    const std::size_t n = in.field.sensors.size();
    std::vector<double> scores(n, 0.0);
    if (const auto* ap = std::get_if<AoIGreedyPull>(&policy)) {
        if (!ap->weights.empty() && ap->weights.size() != n) {
            throw std::invalid_argument("AoIGreedyPull: weight count mismatch");
        }
        for (std::size_t i = 0; i < n; ++i) {
            double w = ap->weights.empty() ? 1.0 : ap->weights[i];
            if (w <= 0.0) throw std::invalid_argument("AoIGreedyPull: non-positive weight");
            scores[i] = w * in.sensor_aoi_seconds[i];
        }
        return scores;
    }
    if (std::holds_alternative<VoIGreedyPull>(policy)) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto& sensor = in.field.sensors[i];
            scores[i] = metrics::expected_voi(
                in.component_models[static_cast<std::size_t>(sensor.component)],
                in.component_histories[static_cast<std::size_t>(sensor.component)],
                in.t, sensor.noise_var, in.tick);
        }
        return scores;
    }
    throw std::invalid_argument("pull_scores: not a score-based pull policy");
}

int decide_pull(const SchedulerPolicy& policy, const PullInputs& in,
                sim::RngStream& rng) {
    const std::size_t n = in.field.sensors.size();
    if (n == 0) throw std::invalid_argument("decide_pull: no sensors");
    if (is_push(policy)) throw std::invalid_argument("decide_pull: push policy passed");
    if (std::holds_alternative<RandomPull>(policy)) {
        return static_cast<int>(rng.uniform_int(n));
    }
    auto scores = pull_scores(policy, in);
    // Strict > keeps ties at the lowest index.
    std::size_t best = 0;
    for (std::size_t i = 1; i < n; ++i) {
        if (scores[i] > scores[best]) best = i;
    }
    return static_cast<int>(best);
}

namespace {

struct SensorState {
    double last_sent_value = 0.0;
    sim::SimTime last_send{};
    bool has_sent = false;
    sim::SimTime last_recv_gen{};
    bool has_received = false;
};

}  // namespace

TrackingRunResult run_tracking_experiment(const TrackingConfig& config) {
    config.field.check();
    config.link.check();
    for (const auto& m : config.component_models) proc::validate(m);
    if (config.epoch_ticks == 0) {
        throw std::invalid_argument("tracking: epoch_ticks must be positive");
    }
    const auto d = static_cast<std::size_t>(config.field.dimension);
    if (config.component_models.size() != d) {
        throw std::invalid_argument("tracking: one process model per component required");
    }

    TrackingRunResult result;
    const std::uint64_t num_epochs = config.duration_ticks / config.epoch_ticks;
    if (num_epochs == 0) return result;

    sim::Kernel kernel(config.seed, config.tick);

    // Ground truth per component on the epoch grid.
    std::vector<sim::SimTime> grid;
    for (std::uint64_t k = 0; k < num_epochs; ++k) {
        grid.push_back(sim::SimTime{k * config.epoch_ticks});
    }
    std::vector<std::vector<double>> truth(d);
    for (std::size_t c = 0; c < d; ++c) {
        auto rng = kernel.substream("truth." + std::to_string(c));
        truth[c] = proc::sample_path(config.component_models[c], grid, rng, config.tick);
    }

    auto noise_rng = kernel.substream("obs_noise");
    auto link_rng = kernel.substream("link");
    auto policy_rng = kernel.substream("policy");

    const std::size_t n_sensors = config.field.sensors.size();
    std::vector<proc::History> component_histories(d);
    std::vector<SensorState> sensors(n_sensors);
    bool pull_in_flight = false;

    auto observe = [&](std::size_t sensor_idx, std::uint64_t epoch) {
        const auto& s = config.field.sensors[sensor_idx];
        double x = truth[static_cast<std::size_t>(s.component)][epoch];
        if (s.noise_var > 0.0) x += noise_rng.normal(0.0, std::sqrt(s.noise_var));
        return x;
    };

    auto deliver = [&](std::size_t sensor_idx, double y, sim::SimTime g, sim::SimTime r) {
        const auto& s = config.field.sensors[sensor_idx];
        component_histories[static_cast<std::size_t>(s.component)].add(
            {y, g, r, static_cast<int>(sensor_idx), s.noise_var});
        sensors[sensor_idx].last_recv_gen = g;
        sensors[sensor_idx].has_received = true;
    };

    auto send = [&](std::size_t sensor_idx, double y, sim::SimTime now, bool is_pull) {
        auto arrival = chan::transmit(config.link, now, link_rng);
        if (arrival) {
            kernel.schedule(*arrival, "deliver",
                            [&, sensor_idx, y, now, is_pull] {
                                deliver(sensor_idx, y, now, kernel.now());
                                if (is_pull) pull_in_flight = false;
                            });
        } else if (is_pull) {
            // Erased pull: the in-flight slot frees one epoch later, as
            // if the receiver timed the request out.
            kernel.schedule_in(config.epoch_ticks, "pull_timeout",
                               [&] { pull_in_flight = false; });
        }
    };

    auto epoch_action = [&](std::uint64_t epoch) {
        const sim::SimTime now = kernel.now();

        // Metrics first, before this epoch's transmissions.
        if (epoch >= 1) {
            TrackingEpochRow row;
            row.t = now;
            for (std::size_t i = 0; i < n_sensors; ++i) {
                double age = sensors[i].has_received
                                 ? config.tick.to_seconds(now) -
                                       config.tick.to_seconds(sensors[i].last_recv_gen)
                                 : config.tick.to_seconds(now);
                row.sensor_aoi.push_back(age);
            }
            PullInputs in{config.component_models, component_histories, config.field,
                          row.sensor_aoi, now, config.tick};
            for (std::size_t i = 0; i < n_sensors; ++i) {
                const auto& s = config.field.sensors[i];
                row.sensor_expected_voi.push_back(metrics::expected_voi(
                    config.component_models[static_cast<std::size_t>(s.component)],
                    component_histories[static_cast<std::size_t>(s.component)], now,
                    s.noise_var, config.tick));
            }
            for (std::size_t c = 0; c < d; ++c) {
                double est = proc::conditional_mean(config.component_models[c],
                                                    component_histories[c], now,
                                                    config.tick);
                double err = truth[c][epoch] - est;
                row.component_sq_error.push_back(err * err);
            }
            if (!is_push(config.policy) && !pull_in_flight) {
                row.chosen_sensor = decide_pull(config.policy, in, policy_rng);
            }
            result.epochs.push_back(row);
        }

        if (is_push(config.policy)) {
            std::vector<std::pair<std::size_t, double>> pushing;
            for (std::size_t i = 0; i < n_sensors; ++i) {
                double y = observe(i, epoch);
                if (decide_push(config.policy, y, sensors[i].last_sent_value, now,
                                sensors[i].last_send, sensors[i].has_sent)) {
                    pushing.emplace_back(i, y);
                }
            }
            // Overlapping pushes within one epoch collide and are lost;
            // the senders still count the attempt.
            for (auto& [i, y] : pushing) {
                sensors[i].last_sent_value = y;
                sensors[i].last_send = now;
                sensors[i].has_sent = true;
                if (pushing.size() == 1) send(i, y, now, false);
            }
        } else {
            int chosen = -1;
            if (epoch == 0) {
                std::vector<double> ages(n_sensors, 0.0);
                PullInputs in{config.component_models, component_histories,
                              config.field, ages, now, config.tick};
                if (!pull_in_flight) chosen = decide_pull(config.policy, in, policy_rng);
            } else {
                chosen = result.epochs.back().chosen_sensor;
            }
            if (chosen >= 0) {
                result.pull_decisions.push_back(chosen);
                pull_in_flight = true;
                auto idx = static_cast<std::size_t>(chosen);
                send(idx, observe(idx, epoch), now, true);
            }
        }
    };

    for (std::uint64_t k = 0; k < num_epochs; ++k) {
        kernel.schedule(grid[k], "epoch", [&, k] { epoch_action(k); });
    }
    kernel.run_until(sim::SimTime{config.duration_ticks});

    double sq_sum = 0.0, aoi_sum = 0.0;
    std::size_t sq_n = 0, aoi_n = 0;
    for (const auto& row : result.epochs) {
        for (double e : row.component_sq_error) {
            sq_sum += e;
            ++sq_n;
        }
        for (double a : row.sensor_aoi) {
            aoi_sum += a;
            ++aoi_n;
        }
    }
    result.mean_sq_error = sq_n ? sq_sum / static_cast<double>(sq_n) : 0.0;
    result.mean_aoi = aoi_n ? aoi_sum / static_cast<double>(aoi_n) : 0.0;
    return result;
}

}  // namespace goalsim::policy
