#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "goalsim/sim/rng.hpp"
#include "goalsim/sim/time.hpp"

namespace goalsim::proc {

// Wiener process with variance rate sigma2 per second. The initial value
// x0 is known exactly at t = 0, so the empty-history prior is (x0, sigma2*t).
struct Wiener {
    double sigma2 = 1.0;
    double x0 = 0.0;
};

// Mean-reverting OU process; the empty-history prior is the stationary
// distribution N(mu, sigma2 / (2 theta)).
struct OrnsteinUhlenbeck {
    double theta = 1.0;
    double mu = 0.0;
    double sigma2 = 1.0;
};

// Finite-state chain; one transition every step_ticks kernel ticks.
struct FiniteMarkov {
    std::vector<std::vector<double>> P;  // row-stochastic
    std::vector<std::string> state_labels;
    std::vector<double> prior;  // empty = uniform
    std::uint64_t step_ticks = 1;

    std::size_t num_states() const { return P.size(); }
};

using ProcessModel = std::variant<Wiener, OrnsteinUhlenbeck, FiniteMarkov>;

// Throws std::invalid_argument on broken invariants (sigma2 <= 0,
// non-stochastic rows, ...).
void validate(const ProcessModel& model);

struct UpdateRecord {
    double y = 0.0;
    sim::SimTime g;  // generation instant
    sim::SimTime r;  // reception instant, r >= g
    int sensor_id = 0;
    double noise_var = 0.0;
};

// Receiver-side knowledge h(t): records ordered by reception time.
class History {
  public:
    void add(const UpdateRecord& rec);
    const std::vector<UpdateRecord>& records() const { return records_; }
    bool empty() const { return records_.empty(); }
    std::size_t size() const { return records_.size(); }
    const UpdateRecord& back() const { return records_.back(); }

    // Record with the freshest generation time (AoI anchor).
    std::optional<UpdateRecord> freshest() const;

  private:
    std::vector<UpdateRecord> records_;
};

struct Sensor {
    int component = 0;  // index into the tracked vector signal
    double noise_var = 0.0;
};

// N sensors over a d-dimensional signal of independent components.
struct SensorField {
    int dimension = 1;
    std::vector<Sensor> sensors;

    void check() const;  // every component observed by >= 1 sensor
};

// --- Sampling -------------------------------------------------------------

// Exact-law sampling of the process at a strictly increasing tick grid.
// For FiniteMarkov the returned values are state indices.
std::vector<double> sample_path(const ProcessModel& model,
                                const std::vector<sim::SimTime>& grid,
                                sim::RngStream& rng,
                                sim::TickRate tick = {});

// --- Exact Bayesian estimation -------------------------------------------

struct GaussianBelief {
    double mean = 0.0;
    double var = 0.0;
};

// Posterior predictive (mean, variance) of a Wiener/OU process at time t
// given the history; exact scalar Kalman filtering over the records in
// generation order. Throws for FiniteMarkov.
GaussianBelief gaussian_predict(const ProcessModel& model, const History& history,
                                sim::SimTime t, sim::TickRate tick = {});

// Posterior distribution over Markov states at time t.
std::vector<double> markov_posterior(const FiniteMarkov& model,
                                     const History& history, sim::SimTime t);

// Posterior-mean estimate x_hat(t | h(t)). For FiniteMarkov this is the
// MAP state index.
double conditional_mean(const ProcessModel& model, const History& history,
                        sim::SimTime t, sim::TickRate tick = {});

// Expected squared error of the conditional-mean estimate (0/1 loss of
// the MAP state for FiniteMarkov).
double conditional_mse(const ProcessModel& model, const History& history,
                       sim::SimTime t, sim::TickRate tick = {});

// --- Small helpers shared with tests -------------------------------------

std::vector<double> markov_power_apply(const std::vector<std::vector<double>>& P,
                                       std::vector<double> row, std::uint64_t steps);

}  // namespace goalsim::proc
