#pragma once

#include <cstdint>
#include <functional>
#include <queue>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "goalsim/sim/rng.hpp"
#include "goalsim/sim/time.hpp"

namespace goalsim::sim {

struct TraceEntry {
    SimTime time;
    std::uint64_t seq;
    std::string tag;
};

using EventTrace = std::vector<TraceEntry>;

// Deterministic single-threaded event kernel. Events fire in
// non-decreasing time order; ties break FIFO by insertion sequence.
class Kernel {
  public:
    explicit Kernel(std::uint64_t root_seed = 0, TickRate tick = {})
        : rng_(root_seed), tick_(tick) {}

    SimTime now() const { return now_; }
    TickRate tick() const { return tick_; }

    void schedule(SimTime t, std::string tag, std::function<void()> fn) {
        if (t < now_) {
            throw std::invalid_argument("schedule: event time is in the past");
        }
        queue_.push(Pending{t, next_seq_++, std::move(tag), std::move(fn)});
    }

    void schedule_in(std::uint64_t delay_ticks, std::string tag,
                     std::function<void()> fn) {
        schedule(SimTime{now_.ticks + delay_ticks}, std::move(tag), std::move(fn));
    }

    // Processes every event with time <= t_end, advances the clock to
    // t_end, and returns the trace of fired events.
    EventTrace run_until(SimTime t_end) {
        EventTrace trace;
        while (!queue_.empty() && queue_.top().time <= t_end) {
            Pending ev = queue_.top();
            queue_.pop();
            now_ = ev.time;
            trace.push_back({ev.time, ev.seq, ev.tag});
            if (ev.fn) ev.fn();
        }
        if (t_end > now_) now_ = t_end;
        return trace;
    }

    RngStream substream(std::string_view name) const {
        if (name.empty()) {
            throw std::invalid_argument("substream: empty name");
        }
        return rng_.substream(name);
    }

    bool empty() const { return queue_.empty(); }
    std::size_t pending() const { return queue_.size(); }

  private:
    struct Pending {
        SimTime time;
        std::uint64_t seq;
        std::string tag;
        std::function<void()> fn;
    };
    struct Later {
        bool operator()(const Pending& a, const Pending& b) const {
            if (a.time != b.time) return b.time < a.time;
            return b.seq < a.seq;
        }
    };

    SimTime now_{};
    std::uint64_t next_seq_ = 0;
    std::priority_queue<Pending, std::vector<Pending>, Later> queue_;
    RngRoot rng_;
    TickRate tick_;
};

}  // namespace goalsim::sim
