#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include "goalsim/chan/channels.hpp"
#include "goalsim/sim/rng.hpp"

namespace goalsim::mdp {

// Four-connected grid; cells index row-major. Moving into an obstacle or
// off the grid leaves the agent in place. Step reward -1, +target_reward
// on entering the (absorbing) target.
struct GridWorld {
    int width = 5;
    int height = 5;
    std::set<int> obstacles;
    int target = 0;
    std::vector<int> start_cells;  // uniform start distribution; empty = all free cells
    double target_reward = 100.0;

    int num_cells() const { return width * height; }
    bool is_free(int cell) const;
    void check() const;  // target reachable from every free cell

    // BFS distance to the target from every cell (-1 for unreachable).
    std::vector<int> distances_to_target() const;
};

// Actions: 0=N, 1=S, 2=E, 3=W.
inline constexpr int kNumActions = 4;

struct StepResult {
    int state = 0;
    double reward = 0.0;
    bool done = false;
};

StepResult step(const GridWorld& env, int state, int action);

// Guide map (state -> message in [0,M)) and agent map (message -> action).
struct MessagePolicy {
    int num_messages = 4;
    std::vector<int> guide;  // size num_cells
    std::vector<int> agent;  // size num_messages
};

// Shortest-path guide: message = index of a distance-decreasing action,
// paired with the identity agent map. Optimal on any grid when M >= 4.
MessagePolicy greedy_guide_policy(const GridWorld& env);

struct GuidanceStats {
    double mean_return = 0.0;
    double mean_steps = 0.0;
    double success_rate = 0.0;
};

// Runs episodes of guide -> channel -> agent. Messages are sent as
// channel.uses_per_message q-ary symbols; q^uses must cover the message
// alphabet. Episodes are cut off at step_cap.
GuidanceStats evaluate_guidance(const GridWorld& env, const MessagePolicy& policy,
                                const chan::DiscreteChannel& channel,
                                std::size_t episodes, sim::RngStream& rng,
                                int step_cap = 200);

// Baseline for the uninformative-channel comparison.
GuidanceStats evaluate_random_walker(const GridWorld& env, std::size_t episodes,
                                     sim::RngStream& rng, int step_cap = 200);

struct QLearnConfig {
    int num_messages = 4;
    std::size_t episodes = 6000;
    std::size_t phase_episodes = 250;  // alternation block (guide phase first)
    double alpha = 0.2;
    double gamma = 0.95;
    double eps_start = 0.4;
    double eps_end = 0.02;
    int step_cap = 100;
    std::size_t eval_episodes = 100;  // greedy evaluation cadence per phase
};

struct QLearnResult {
    MessagePolicy best_policy;
    GuidanceStats best_stats;
    std::vector<double> training_curve;  // mean return per evaluation point
};

// Alternating tabular Q-learning: one side explores and learns while the
// other acts greedily, switching every phase_episodes episodes. Returns
// the best jointly evaluated policy.
QLearnResult q_learn_joint(const GridWorld& env, const chan::DiscreteChannel& channel,
                           const QLearnConfig& cfg, sim::RngStream& rng);

// --- Pragmatic source coding over state graphs ----------------------------

struct StateGraph {
    struct Edge {
        int to = 0;
        double cost = 0.0;
    };
    std::vector<std::vector<Edge>> adj;
    int goal = 0;

    int num_vertices() const { return static_cast<int>(adj.size()); }
    void check() const;  // goal reachable from every vertex, costs >= 0
};

enum class GuidanceScheme { per_step, goal_only, horizon_k };

struct GuidanceCost {
    double transition_cost = 0.0;
    double total_bits = 0.0;
    double bits_before_first_action = 0.0;
    std::uint64_t wait_steps = 0;
    std::uint64_t total_steps = 0;  // waits + moves
};

// Cost of steering the agent along the minimum-cost path under the given
// coding scheme, with `budget_bits_per_step` bits delivered per time
// step. per_step Huffman-codes the out-edge of the current state
// (uniform edge distribution); goal_only sends ceil(log2 |V|) bits up
// front; horizon_k jointly codes blocks of k transitions.
GuidanceCost guidance_code_cost(const StateGraph& graph, int start,
                                GuidanceScheme scheme, int horizon = 1,
                                int budget_bits_per_step = 1);

struct OracleResult {
    double transition_cost = 0.0;
    std::uint64_t wait_steps = 0;
    std::uint64_t total_steps = 0;
};

// Brute-force optimum over (agent vertex, delivered-bit bank): the guide
// may use any prefix-valid instruction code, so a designated out-edge
// costs one bit (zero when the vertex has a single out-edge). Instances
// above 12 vertices are rejected.
OracleResult guidance_oracle(const StateGraph& graph, int start,
                             int budget_bits_per_step = 1);

// Uniform Huffman code lengths for k equiprobable symbols, shortest codes
// first.
std::vector<int> uniform_huffman_lengths(std::size_t k);

// Deterministic minimum-cost path (Dijkstra, lowest-index tie-break) as a
// vertex sequence from start to goal.
std::vector<int> min_cost_path(const StateGraph& graph, int start);

}  // namespace goalsim::mdp
