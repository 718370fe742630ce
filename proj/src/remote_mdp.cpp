#include "goalsim/mdp/remote_mdp.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <queue>
#include <stdexcept>

namespace goalsim::mdp {

namespace {

constexpr int kDx[kNumActions] = {0, 0, 1, -1};
constexpr int kDy[kNumActions] = {-1, 1, 0, 0};  // N, S, E, W

std::vector<std::uint32_t> encode_message(int m, std::uint32_t uses, std::uint32_t q) {
    std::vector<std::uint32_t> symbols(uses, 0);
    auto v = static_cast<std::uint64_t>(m);
    for (std::uint32_t i = 0; i < uses; ++i) {
        symbols[uses - 1 - i] = static_cast<std::uint32_t>(v % q);
        v /= q;
    }
    return symbols;
}

int decode_message(const std::vector<std::uint32_t>& symbols, std::uint32_t q, int M) {
    std::uint64_t v = 0;
    for (auto s : symbols) v = v * q + s;
    return static_cast<int>(v % static_cast<std::uint64_t>(M));
}

int sample_start(const GridWorld& env, sim::RngStream& rng) {
    if (!env.start_cells.empty()) {
        return env.start_cells[rng.uniform_int(env.start_cells.size())];
    }
    std::vector<int> free_cells;
    for (int c = 0; c < env.num_cells(); ++c) {
        if (env.is_free(c) && c != env.target) free_cells.push_back(c);
    }
    return free_cells[rng.uniform_int(free_cells.size())];
}

template <typename ChooseMessage, typename ChooseAction>
GuidanceStats run_episodes(const GridWorld& env, const chan::DiscreteChannel& channel,
                           int M, std::size_t episodes, int step_cap,
                           sim::RngStream& rng, ChooseMessage&& choose_message,
                           ChooseAction&& choose_action) {
    double sum_return = 0.0, sum_steps = 0.0;
    std::size_t successes = 0;
    for (std::size_t ep = 0; ep < episodes; ++ep) {
        int s = sample_start(env, rng);
        double ret = 0.0;
        int steps = 0;
        for (; steps < step_cap; ++steps) {
            int m = choose_message(s);
            auto rx = qsc_transmit(channel, encode_message(m, channel.uses_per_message,
                                                           channel.q), rng);
            int m_rx = decode_message(rx, channel.q, M);
            int a = choose_action(m_rx);
            StepResult res = step(env, s, a);
            ret += res.reward;
            s = res.state;
            if (res.done) {
                ++steps;
                ++successes;
                break;
            }
        }
        sum_return += ret;
        sum_steps += steps;
    }
    auto n = static_cast<double>(episodes);
    return {sum_return / n, sum_steps / n, static_cast<double>(successes) / n};
}

}  // namespace

bool GridWorld::is_free(int cell) const {
    return cell >= 0 && cell < num_cells() && !obstacles.count(cell);
}

std::vector<int> GridWorld::distances_to_target() const {
    std::vector<int> dist(static_cast<std::size_t>(num_cells()), -1);
    std::deque<int> frontier{target};
    dist[static_cast<std::size_t>(target)] = 0;
    while (!frontier.empty()) {
        int c = frontier.front();
        frontier.pop_front();
        int x = c % width, y = c / width;
        for (int a = 0; a < kNumActions; ++a) {
            int nx = x + kDx[a], ny = y + kDy[a];
            if (nx < 0 || nx >= width || ny < 0 || ny >= height) continue;
            int nc = ny * width + nx;
            if (!is_free(nc) || dist[static_cast<std::size_t>(nc)] >= 0) continue;
            dist[static_cast<std::size_t>(nc)] = dist[static_cast<std::size_t>(c)] + 1;
            frontier.push_back(nc);
        }
    }
    return dist;
}

void GridWorld::check() const {
    if (width < 1 || height < 1) throw std::invalid_argument("GridWorld: empty grid");
    if (!is_free(target)) throw std::invalid_argument("GridWorld: target blocked");
    if (target_reward <= 0.0) throw std::invalid_argument("GridWorld: reward must be positive");
    auto dist = distances_to_target();
    for (int c = 0; c < num_cells(); ++c) {
        if (is_free(c) && dist[static_cast<std::size_t>(c)] < 0) {
            throw std::invalid_argument("GridWorld: target unreachable from free cell");
        }
    }
    for (int c : start_cells) {
        if (!is_free(c)) throw std::invalid_argument("GridWorld: blocked start cell");
    }
}

StepResult step(const GridWorld& env, int state, int action) {
    if (action < 0 || action >= kNumActions) {
        throw std::invalid_argument("step: action out of range");
    }
    if (state == env.target) throw std::invalid_argument("step: state is terminal");
    int x = state % env.width, y = state / env.width;
    int nx = x + kDx[action], ny = y + kDy[action];
    int next = state;  // blocked moves stay in place
    if (nx >= 0 && nx < env.width && ny >= 0 && ny < env.height) {
        int nc = ny * env.width + nx;
        if (env.is_free(nc)) next = nc;
    }
    if (next == env.target) return {next, env.target_reward, true};
    return {next, -1.0, false};
}

MessagePolicy greedy_guide_policy(const GridWorld& env) {
    auto dist = env.distances_to_target();
    MessagePolicy p;
    p.num_messages = kNumActions;
    p.guide.assign(static_cast<std::size_t>(env.num_cells()), 0);
    p.agent = {0, 1, 2, 3};
    for (int c = 0; c < env.num_cells(); ++c) {
        if (!env.is_free(c) || c == env.target) continue;
        int x = c % env.width, y = c / env.width;
        for (int a = 0; a < kNumActions; ++a) {
            int nx = x + kDx[a], ny = y + kDy[a];
            if (nx < 0 || nx >= env.width || ny < 0 || ny >= env.height) continue;
            int nc = ny * env.width + nx;
            if (env.is_free(nc) &&
                dist[static_cast<std::size_t>(nc)] ==
                    dist[static_cast<std::size_t>(c)] - 1) {
                p.guide[static_cast<std::size_t>(c)] = a;
                break;
            }
        }
    }
    return p;
}

GuidanceStats evaluate_guidance(const GridWorld& env, const MessagePolicy& policy,
                                const chan::DiscreteChannel& channel,
                                std::size_t episodes, sim::RngStream& rng,
                                int step_cap) {
    env.check();
    channel.check();
    if (episodes < 1) throw std::invalid_argument("evaluate_guidance: episodes < 1");
    double capacity = std::pow(static_cast<double>(channel.q),
                               static_cast<double>(channel.uses_per_message));
    if (capacity < static_cast<double>(policy.num_messages)) {
        throw std::invalid_argument("evaluate_guidance: q^uses below message alphabet");
    }
    return run_episodes(
        env, channel, policy.num_messages, episodes, step_cap, rng,
        [&](int s) { return policy.guide[static_cast<std::size_t>(s)]; },
        [&](int m) { return policy.agent[static_cast<std::size_t>(m)]; });
}

GuidanceStats evaluate_random_walker(const GridWorld& env, std::size_t episodes,
                                     sim::RngStream& rng, int step_cap) {
    double sum_return = 0.0, sum_steps = 0.0;
    std::size_t successes = 0;
    for (std::size_t ep = 0; ep < episodes; ++ep) {
        int s = sample_start(env, rng);
        double ret = 0.0;
        int steps = 0;
        for (; steps < step_cap; ++steps) {
            StepResult res = step(env, s, static_cast<int>(rng.uniform_int(kNumActions)));
            ret += res.reward;
            s = res.state;
            if (res.done) {
                ++steps;
                ++successes;
                break;
            }
        }
        sum_return += ret;
        sum_steps += steps;
    }
    auto n = static_cast<double>(episodes);
    return {sum_return / n, sum_steps / n, static_cast<double>(successes) / n};
}

QLearnResult q_learn_joint(const GridWorld& env, const chan::DiscreteChannel& channel,
                           const QLearnConfig& cfg, sim::RngStream& rng) {
    env.check();
    channel.check();
    const int M = cfg.num_messages;
    const auto cells = static_cast<std::size_t>(env.num_cells());
    std::vector<std::vector<double>> q_guide(cells, std::vector<double>(M, 0.0));
    std::vector<std::vector<double>> q_agent(static_cast<std::size_t>(M),
                                             std::vector<double>(kNumActions, 0.0));

    auto argmax = [](const std::vector<double>& v) {
        std::size_t best = 0;
        for (std::size_t i = 1; i < v.size(); ++i) {
            if (v[i] > v[best]) best = i;
        }
        return static_cast<int>(best);
    };

    auto greedy_policy = [&] {
        MessagePolicy p;
        p.num_messages = M;
        p.guide.resize(cells);
        p.agent.resize(static_cast<std::size_t>(M));
        for (std::size_t s = 0; s < cells; ++s) p.guide[s] = argmax(q_guide[s]);
        for (std::size_t m = 0; m < static_cast<std::size_t>(M); ++m) {
            p.agent[m] = argmax(q_agent[m]);
        }
        return p;
    };

    QLearnResult result;
    result.best_stats.mean_return = -std::numeric_limits<double>::infinity();
    sim::RngStream eval_rng = rng.fork(0x9E3779B9ULL);

    for (std::size_t ep = 0; ep < cfg.episodes; ++ep) {
        const bool guide_phase = (ep / cfg.phase_episodes) % 2 == 0;
        double frac = static_cast<double>(ep) / static_cast<double>(cfg.episodes);
        double eps = cfg.eps_start + (cfg.eps_end - cfg.eps_start) * frac;

        int s = sample_start(env, rng);
        // Pending agent transition (received message, action, reward).
        bool have_pending = false;
        int pend_m = 0, pend_a = 0;
        double pend_r = 0.0;

        for (int t = 0; t < cfg.step_cap; ++t) {
            int m;
            if (guide_phase && rng.bernoulli(eps)) {
                m = static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(M)));
            } else {
                m = argmax(q_guide[static_cast<std::size_t>(s)]);
            }
            auto rx = qsc_transmit(channel, encode_message(m, channel.uses_per_message,
                                                           channel.q), rng);
            int m_rx = decode_message(rx, channel.q, M);
            int a;
            if (!guide_phase && rng.bernoulli(eps)) {
                a = static_cast<int>(rng.uniform_int(kNumActions));
            } else {
                a = argmax(q_agent[static_cast<std::size_t>(m_rx)]);
            }
            StepResult res = step(env, s, a);

            if (guide_phase) {
                double target = res.reward;
                if (!res.done) {
                    const auto& next_q = q_guide[static_cast<std::size_t>(res.state)];
                    target += cfg.gamma * *std::max_element(next_q.begin(), next_q.end());
                }
                double& qv = q_guide[static_cast<std::size_t>(s)][static_cast<std::size_t>(m)];
                qv += cfg.alpha * (target - qv);
            } else {
                // The agent's next "state" is the next received message;
                // bootstrap one step late once it is known.
                if (have_pending) {
                    const auto& next_q = q_agent[static_cast<std::size_t>(m_rx)];
                    double target = pend_r + cfg.gamma *
                                                 *std::max_element(next_q.begin(),
                                                                   next_q.end());
                    double& qv = q_agent[static_cast<std::size_t>(pend_m)]
                                        [static_cast<std::size_t>(pend_a)];
                    qv += cfg.alpha * (target - qv);
                }
                pend_m = m_rx;
                pend_a = a;
                pend_r = res.reward;
                have_pending = true;
                if (res.done || t == cfg.step_cap - 1) {
                    double& qv = q_agent[static_cast<std::size_t>(pend_m)]
                                        [static_cast<std::size_t>(pend_a)];
                    qv += cfg.alpha * (pend_r - qv);
                    have_pending = false;
                }
            }
            s = res.state;
            if (res.done) break;
        }

        if ((ep + 1) % cfg.phase_episodes == 0 || ep + 1 == cfg.episodes) {
            MessagePolicy p = greedy_policy();
            sim::RngStream r = eval_rng.fork(ep);
            GuidanceStats stats =
                evaluate_guidance(env, p, channel, cfg.eval_episodes, r, cfg.step_cap);
            result.training_curve.push_back(stats.mean_return);
            if (stats.mean_return > result.best_stats.mean_return) {
                result.best_stats = stats;
                result.best_policy = p;
            }
        }
    }
    return result;
}

// --- State graphs ---------------------------------------------------------

void StateGraph::check() const {
    const int n = num_vertices();
    if (n == 0) throw std::invalid_argument("StateGraph: empty");
    if (goal < 0 || goal >= n) throw std::invalid_argument("StateGraph: bad goal");
    for (const auto& edges : adj) {
        for (const auto& e : edges) {
            if (e.to < 0 || e.to >= n) throw std::invalid_argument("StateGraph: bad edge");
            if (e.cost < 0.0) throw std::invalid_argument("StateGraph: negative cost");
        }
    }
    // Reverse reachability from the goal.
    std::vector<std::vector<int>> rev(static_cast<std::size_t>(n));
    for (int v = 0; v < n; ++v) {
        for (const auto& e : adj[static_cast<std::size_t>(v)]) {
            rev[static_cast<std::size_t>(e.to)].push_back(v);
        }
    }
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::deque<int> frontier{goal};
    seen[static_cast<std::size_t>(goal)] = true;
    while (!frontier.empty()) {
        int v = frontier.front();
        frontier.pop_front();
        for (int u : rev[static_cast<std::size_t>(v)]) {
            if (!seen[static_cast<std::size_t>(u)]) {
                seen[static_cast<std::size_t>(u)] = true;
                frontier.push_back(u);
            }
        }
    }
    if (!std::all_of(seen.begin(), seen.end(), [](bool b) { return b; })) {
        throw std::invalid_argument("StateGraph: goal unreachable from some vertex");
    }
}

namespace {

std::vector<double> dist_to_goal(const StateGraph& graph) {
    const auto n = static_cast<std::size_t>(graph.num_vertices());
    std::vector<std::vector<StateGraph::Edge>> rev(n);
    for (int v = 0; v < graph.num_vertices(); ++v) {
        for (const auto& e : graph.adj[static_cast<std::size_t>(v)]) {
            rev[static_cast<std::size_t>(e.to)].push_back({v, e.cost});
        }
    }
    std::vector<double> dist(n, std::numeric_limits<double>::infinity());
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
    dist[static_cast<std::size_t>(graph.goal)] = 0.0;
    pq.push({0.0, graph.goal});
    while (!pq.empty()) {
        auto [d, v] = pq.top();
        pq.pop();
        if (d > dist[static_cast<std::size_t>(v)]) continue;
        for (const auto& e : rev[static_cast<std::size_t>(v)]) {
            double nd = d + e.cost;
            if (nd < dist[static_cast<std::size_t>(e.to)]) {
                dist[static_cast<std::size_t>(e.to)] = nd;
                pq.push({nd, e.to});
            }
        }
    }
    return dist;
}

constexpr double kCostTol = 1e-12;

std::uint64_t count_walks(const StateGraph& graph, int from, int len,
                          std::map<std::pair<int, int>, std::uint64_t>& memo) {
    if (len == 0) return 1;
    auto key = std::make_pair(from, len);
    auto it = memo.find(key);
    if (it != memo.end()) return it->second;
    std::uint64_t total = 0;
    for (const auto& e : graph.adj[static_cast<std::size_t>(from)]) {
        total += count_walks(graph, e.to, len - 1, memo);
    }
    memo[key] = total;
    return total;
}

}  // namespace

std::vector<int> uniform_huffman_lengths(std::size_t k) {
    if (k == 0) return {};
    if (k == 1) return {0};
    int a = 0;
    while ((std::size_t{1} << (a + 1)) <= k) ++a;
    std::size_t r = k - (std::size_t{1} << a);
    // k - 2r symbols of length a, then 2r of length a + 1.
    std::vector<int> lengths;
    lengths.reserve(k);
    for (std::size_t i = 0; i < k - 2 * r; ++i) lengths.push_back(a);
    for (std::size_t i = 0; i < 2 * r; ++i) lengths.push_back(a + 1);
    return lengths;
}

std::vector<int> min_cost_path(const StateGraph& graph, int start) {
    graph.check();
    auto dist = dist_to_goal(graph);
    std::vector<int> path{start};
    int v = start;
    while (v != graph.goal) {
        const auto& edges = graph.adj[static_cast<std::size_t>(v)];
        int next = -1;
        for (const auto& e : edges) {
            if (std::abs(dist[static_cast<std::size_t>(v)] -
                         (e.cost + dist[static_cast<std::size_t>(e.to)])) < kCostTol) {
                next = e.to;
                break;
            }
        }
        if (next < 0) throw std::logic_error("min_cost_path: no optimal edge");
        path.push_back(next);
        v = next;
    }
    return path;
}

GuidanceCost guidance_code_cost(const StateGraph& graph, int start,
                                GuidanceScheme scheme, int horizon,
                                int budget_bits_per_step) {
    graph.check();
    if (budget_bits_per_step < 1) {
        throw std::invalid_argument("guidance_code_cost: budget must be >= 1 bit/step");
    }
    if (scheme == GuidanceScheme::horizon_k && horizon < 1) {
        throw std::invalid_argument("guidance_code_cost: horizon must be >= 1");
    }
    GuidanceCost out;
    if (start == graph.goal) return out;

    auto path = min_cost_path(graph, start);
    std::vector<int> chosen_edges;  // edge index taken at each path step
    for (std::size_t i = 0; i + 1 < path.size(); ++i) {
        const auto& edges = graph.adj[static_cast<std::size_t>(path[i])];
        // Parallel edges to the same vertex are allowed; steer along the
        // cheapest one so the realized cost matches the shortest-path value.
        int idx = -1;
        for (std::size_t j = 0; j < edges.size(); ++j) {
            if (edges[j].to != path[i + 1]) continue;
            if (idx < 0 || edges[j].cost < edges[static_cast<std::size_t>(idx)].cost) {
                idx = static_cast<int>(j);
            }
        }
        chosen_edges.push_back(idx);
        out.transition_cost += edges[static_cast<std::size_t>(idx)].cost;
    }
    const std::size_t moves = chosen_edges.size();

    // Codeword lengths per decodable instruction block, each gating the
    // number of moves it covers.
    struct Block {
        int bits;
        std::size_t moves;
    };
    std::vector<Block> blocks;
    if (scheme == GuidanceScheme::per_step) {
        for (std::size_t i = 0; i < moves; ++i) {
            auto lengths = uniform_huffman_lengths(
                graph.adj[static_cast<std::size_t>(path[i])].size());
            blocks.push_back({lengths[static_cast<std::size_t>(chosen_edges[i])], 1});
        }
    } else if (scheme == GuidanceScheme::goal_only) {
        int bits = static_cast<int>(
            std::ceil(std::log2(static_cast<double>(graph.num_vertices()))));
        blocks.push_back({bits, moves});
    } else {
        std::map<std::pair<int, int>, std::uint64_t> memo;
        std::size_t i = 0;
        while (i < moves) {
            int k = static_cast<int>(std::min<std::size_t>(horizon, moves - i));
            // Lexicographic rank of the chosen k-step continuation among
            // all length-k walks from path[i].
            std::uint64_t rank = 0;
            int v = path[i];
            for (int j = 0; j < k; ++j) {
                const auto& edges = graph.adj[static_cast<std::size_t>(v)];
                int chosen = chosen_edges[i + static_cast<std::size_t>(j)];
                for (int e = 0; e < chosen; ++e) {
                    rank += count_walks(graph, edges[static_cast<std::size_t>(e)].to,
                                        k - j - 1, memo);
                }
                v = edges[static_cast<std::size_t>(chosen)].to;
            }
            std::uint64_t total = count_walks(graph, path[i], k, memo);
            auto lengths = uniform_huffman_lengths(static_cast<std::size_t>(total));
            blocks.push_back({lengths[static_cast<std::size_t>(rank)],
                              static_cast<std::size_t>(k)});
            i += static_cast<std::size_t>(k);
        }
    }

    // Bit-bank timing: the channel delivers budget bits per time step; a
    // block's moves start once its codeword is fully received.
    std::int64_t bank = 0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        const auto& blk = blocks[b];
        out.total_bits += blk.bits;
        while (true) {
            bank += budget_bits_per_step;
            ++out.total_steps;
            if (bank >= blk.bits) break;
            ++out.wait_steps;
        }
        bank -= blk.bits;
        // First move of the block happens this step; remaining moves of
        // the block take one step each.
        out.total_steps += blk.moves - 1;
        if (b == 0) out.bits_before_first_action = blk.bits;
    }
    return out;
}

OracleResult guidance_oracle(const StateGraph& graph, int start,
                             int budget_bits_per_step) {
    graph.check();
    if (graph.num_vertices() > 12) {
        throw std::invalid_argument("guidance_oracle: instance too large (> 12 vertices)");
    }
    if (budget_bits_per_step < 1) {
        throw std::invalid_argument("guidance_oracle: budget must be >= 1 bit/step");
    }
    const int cap = std::max(4, 2 * budget_bits_per_step);
    const auto n = static_cast<std::size_t>(graph.num_vertices());
    struct Node {
        double cost;
        std::uint64_t steps;
        std::uint64_t waits;
        int v;
        int bank;
    };
    auto worse = [](const Node& a, const Node& b) {
        if (a.cost != b.cost) return a.cost > b.cost;
        return a.steps > b.steps;
    };
    std::vector<std::vector<std::pair<double, std::uint64_t>>> best(
        n, std::vector<std::pair<double, std::uint64_t>>(
               static_cast<std::size_t>(cap + 1),
               {std::numeric_limits<double>::infinity(), 0}));
    std::priority_queue<Node, std::vector<Node>, decltype(worse)> pq(worse);
    pq.push({0.0, 0, 0, start, 0});
    best[static_cast<std::size_t>(start)][0] = {0.0, 0};

    auto relax = [&](double cost, std::uint64_t steps, std::uint64_t waits, int v,
                     int bank) {
        auto& slot = best[static_cast<std::size_t>(v)][static_cast<std::size_t>(bank)];
        if (cost < slot.first - kCostTol ||
            (std::abs(cost - slot.first) <= kCostTol && steps < slot.second)) {
            slot = {cost, steps};
            pq.push({cost, steps, waits, v, bank});
        }
    };

    while (!pq.empty()) {
        Node cur = pq.top();
        pq.pop();
        auto& slot = best[static_cast<std::size_t>(cur.v)][static_cast<std::size_t>(cur.bank)];
        if (cur.cost > slot.first + kCostTol || cur.steps > slot.second) continue;
        if (cur.v == graph.goal) {
            OracleResult res;
            res.transition_cost = cur.cost;
            res.total_steps = cur.steps;
            res.wait_steps = cur.waits;
            return res;
        }
        int gained = std::min(cur.bank + budget_bits_per_step, cap);
        // Wait one step.
        relax(cur.cost, cur.steps + 1, cur.waits + 1, cur.v, gained);
        // Move along any out-edge; a designated edge costs one bit of
        // prefix code (zero if the vertex has a single out-edge).
        const auto& edges = graph.adj[static_cast<std::size_t>(cur.v)];
        int need = edges.size() > 1 ? 1 : 0;
        if (gained >= need) {
            for (const auto& e : edges) {
                relax(cur.cost + e.cost, cur.steps + 1, cur.waits, e.to, gained - need);
            }
        }
    }
    throw std::logic_error("guidance_oracle: goal not reached");
}

}  // namespace goalsim::mdp
