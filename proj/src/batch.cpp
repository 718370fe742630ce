#include "goalsim/edge/batch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace goalsim::edge {

void ModelProfile::check() const {
    if (a.empty() || a.size() != c.size()) {
        throw std::invalid_argument("ModelProfile: a and c must be nonempty and equal length");
    }
    for (double v : a) {
        if (v < 0.0) throw std::invalid_argument("ModelProfile: a must be >= 0");
    }
    for (double v : c) {
        if (v <= 0.0) throw std::invalid_argument("ModelProfile: c must be > 0");
    }
}

std::vector<double> compute_batch(const ModelProfile& profile,
                                  const std::vector<int>& exit_blocks) {
    profile.check();
    if (exit_blocks.empty()) throw std::invalid_argument("compute_batch: empty batch");
    const int L = static_cast<int>(profile.blocks());
    for (int b : exit_blocks) {
        if (b < 1 || b > L) throw std::invalid_argument("compute_batch: exit block out of range");
    }
    std::vector<double> offsets(exit_blocks.size(), 0.0);
    double elapsed = 0.0;
    for (int b = 1; b <= L; ++b) {
        std::size_t m = 0;
        for (int e : exit_blocks) {
            if (e >= b) ++m;
        }
        if (m == 0) break;
        elapsed += profile.a[static_cast<std::size_t>(b - 1)] +
                   profile.c[static_cast<std::size_t>(b - 1)] * static_cast<double>(m);
        for (std::size_t i = 0; i < exit_blocks.size(); ++i) {
            if (exit_blocks[i] == b) offsets[i] = elapsed;
        }
    }
    return offsets;
}

std::vector<InferenceTask> make_workload(double lambda, double duration,
                                         const std::vector<double>& exit_probs,
                                         double uplink_time, sim::RngStream& rng) {
    if (lambda <= 0.0) throw std::invalid_argument("make_workload: lambda must be positive");
    if (exit_probs.empty()) throw std::invalid_argument("make_workload: empty exit distribution");
    double total = std::accumulate(exit_probs.begin(), exit_probs.end(), 0.0);
    if (total <= 0.0) throw std::invalid_argument("make_workload: exit probabilities sum to 0");

    std::vector<InferenceTask> tasks;
    double t = 0.0;
    while (true) {
        t += rng.exponential(lambda);
        if (t >= duration) break;
        InferenceTask task;
        task.arrival = t;
        task.uplink_time = uplink_time;
        double u = rng.uniform() * total;
        double acc = 0.0;
        task.exit_block = static_cast<int>(exit_probs.size());
        for (std::size_t b = 0; b < exit_probs.size(); ++b) {
            acc += exit_probs[b];
            if (u < acc) {
                task.exit_block = static_cast<int>(b) + 1;
                break;
            }
        }
        tasks.push_back(task);
    }
    return tasks;
}

SimResult simulate(const ModelProfile& profile, const BatchPolicy& policy,
                   const std::vector<InferenceTask>& workload, double duration,
                   bool early_exit, std::size_t backlog_cap) {
    profile.check();
    const int L = static_cast<int>(profile.blocks());

    // Serve in ready order (arrival + uplink).
    std::vector<std::size_t> order(workload.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        double ri = workload[i].arrival + workload[i].uplink_time;
        double rj = workload[j].arrival + workload[j].uplink_time;
        return ri < rj;
    });

    SimResult result;
    result.records.resize(workload.size());
    for (std::size_t i = 0; i < workload.size(); ++i) {
        result.records[i].arrival = workload[i].arrival;
        result.records[i].ready = workload[i].arrival + workload[i].uplink_time;
        result.records[i].exit_block = workload[i].exit_block;
    }

    const std::size_t b_max = std::visit([](const auto& p) { return p.b_max; }, policy);
    if (b_max == 0) throw std::invalid_argument("simulate: b_max must be >= 1");
    const auto* timeout = std::get_if<Timeout>(&policy);

    std::size_t next = 0;
    double server_free = 0.0;
    while (next < workload.size()) {
        std::size_t remaining = workload.size() - next;
        double first_ready = result.records[order[next]].ready;
        double release;
        std::size_t take;
        if (timeout) {
            double full = remaining >= b_max
                              ? result.records[order[next + b_max - 1]].ready
                              : std::numeric_limits<double>::infinity();
            release = std::min(full, first_ready + timeout->tau);
            if (!std::isfinite(release)) release = first_ready + timeout->tau;
            double start_at = std::max(server_free, release);
            take = 0;
            while (take < b_max && next + take < workload.size() &&
                   result.records[order[next + take]].ready <= start_at) {
                ++take;
            }
            take = std::max<std::size_t>(take, 1);
        } else {
            // FixedSize waits for a full batch; a final partial group is
            // never released.
            if (remaining < b_max) break;
            release = result.records[order[next + b_max - 1]].ready;
            take = b_max;
        }

        BatchRecord batch;
        batch.start = std::max(server_free, release);
        std::vector<int> exits;
        for (std::size_t j = 0; j < take; ++j) {
            std::size_t idx = order[next + j];
            batch.tasks.push_back(idx);
            exits.push_back(early_exit ? workload[idx].exit_block : L);
        }
        auto offsets = compute_batch(profile, exits);
        double makespan = *std::max_element(offsets.begin(), offsets.end());
        batch.end = batch.start + makespan;
        for (std::size_t j = 0; j < take; ++j) {
            auto& rec = result.records[batch.tasks[j]];
            rec.batch_id = static_cast<std::int64_t>(result.batches.size());
            rec.completion = batch.start + offsets[j];
            rec.latency = rec.completion - rec.arrival;
        }

        std::size_t queued = 0;
        while (next + take + queued < workload.size() &&
               result.records[order[next + take + queued]].ready <= batch.start) {
            ++queued;
        }
        if (queued > backlog_cap) result.unstable = true;

        server_free = batch.end;
        next += take;
        result.batches.push_back(std::move(batch));
    }

    std::vector<double> latencies;
    for (const auto& rec : result.records) {
        if (rec.batch_id >= 0 && rec.completion <= duration) {
            ++result.completed;
            latencies.push_back(rec.latency);
        }
    }
    if (!latencies.empty()) {
        result.mean_latency =
            std::accumulate(latencies.begin(), latencies.end(), 0.0) /
            static_cast<double>(latencies.size());
        std::sort(latencies.begin(), latencies.end());
        auto p95 = static_cast<std::size_t>(
            std::ceil(0.95 * static_cast<double>(latencies.size()))) - 1;
        result.p95_latency = latencies[std::min(p95, latencies.size() - 1)];
    }
    result.throughput =
        duration > 0.0 ? static_cast<double>(result.completed) / duration : 0.0;
    return result;
}

std::vector<double> allocate_bandwidth_greedy(const std::vector<UserDemand>& users,
                                              double total_bandwidth) {
    if (total_bandwidth <= 0.0) {
        throw std::invalid_argument("allocate_bandwidth_greedy: bandwidth must be positive");
    }
    const std::size_t n = users.size();
    std::vector<double> rate(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (users[i].deadline <= 0.0) {
            throw std::invalid_argument("allocate_bandwidth_greedy: deadline must be positive");
        }
        rate[i] = users[i].work / users[i].deadline;
    }
    std::vector<double> shares(n, 0.0);
    if (n == 0) return shares;

    double need = std::accumulate(rate.begin(), rate.end(), 0.0);
    if (need <= total_bandwidth) {
        // Everyone meets the deadline; the surplus is split evenly.
        double surplus = (total_bandwidth - need) / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) shares[i] = rate[i] + surplus;
        return shares;
    }

    // Deficit order: largest required rate first, exact ties served as a
    // group so identical users stay identical.
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(),
                     [&](std::size_t a, std::size_t b) { return rate[a] > rate[b]; });
    double remaining = total_bandwidth;
    std::size_t i = 0;
    while (i < n && remaining > 0.0) {
        std::size_t j = i;
        while (j < n && rate[idx[j]] == rate[idx[i]]) ++j;
        auto group = static_cast<double>(j - i);
        double give = std::min(rate[idx[i]], remaining / group);
        for (std::size_t g = i; g < j; ++g) shares[idx[g]] = give;
        remaining -= give * group;
        i = j;
    }
    return shares;
}

}  // namespace goalsim::edge
