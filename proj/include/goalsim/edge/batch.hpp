#pragma once

#include <cstdint>
#include <variant>
#include <vector>

#include "goalsim/sim/rng.hpp"

namespace goalsim::edge {

// L layer blocks; running block b over a batch of m tasks takes
// a[b] + c[b] * m (fixed memory-access cost plus per-task compute).
struct ModelProfile {
    std::vector<double> a;
    std::vector<double> c;

    std::size_t blocks() const { return a.size(); }
    void check() const;  // a >= 0, c > 0, equal lengths, nonempty
};

struct InferenceTask {
    double arrival = 0.0;
    double uplink_time = 0.0;
    int exit_block = 1;  // 1..L, from the task's accuracy requirement
};

// FixedSize waits until b_max tasks have arrived; Timeout releases early
// once the oldest queued task has waited tau.
struct FixedSize {
    std::size_t b_max = 1;
};
struct Timeout {
    std::size_t b_max = 1;
    double tau = 0.0;
};
using BatchPolicy = std::variant<FixedSize, Timeout>;

// Completion offsets from batch start: blocks run in order, each task
// finishes (and its result is returned) at the end of its exit block.
std::vector<double> compute_batch(const ModelProfile& profile,
                                  const std::vector<int>& exit_blocks);

struct TaskRecord {
    double arrival = 0.0;
    double ready = 0.0;  // uplink done
    std::int64_t batch_id = -1;
    int exit_block = 0;
    double completion = 0.0;
    double latency = 0.0;  // completion - arrival
};

struct BatchRecord {
    double start = 0.0;
    double end = 0.0;
    std::vector<std::size_t> tasks;  // workload indices
};

struct SimResult {
    std::vector<TaskRecord> records;
    std::vector<BatchRecord> batches;
    double mean_latency = 0.0;
    double p95_latency = 0.0;
    double throughput = 0.0;  // completions within the horizon per time unit
    std::size_t completed = 0;
    bool unstable = false;  // queue exceeded the backlog cap
};

// Poisson arrivals with iid exit blocks drawn from exit_probs (length L).
std::vector<InferenceTask> make_workload(double lambda, double duration,
                                         const std::vector<double>& exit_probs,
                                         double uplink_time, sim::RngStream& rng);

// One batch in service at a time; tasks join in ready order. Disabling
// early exits runs every task to the last block with the same batches.
SimResult simulate(const ModelProfile& profile, const BatchPolicy& policy,
                   const std::vector<InferenceTask>& workload, double duration,
                   bool early_exit = true, std::size_t backlog_cap = 1000);

struct UserDemand {
    double work = 0.0;      // bits to deliver
    double deadline = 1.0;  // seconds
};

// Largest-deficit-first heuristic; exact ties share equally. No
// optimality claim.
std::vector<double> allocate_bandwidth_greedy(const std::vector<UserDemand>& users,
                                              double total_bandwidth);

}  // namespace goalsim::edge
