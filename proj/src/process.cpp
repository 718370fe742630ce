#include "goalsim/proc/process.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace goalsim::proc {

namespace {

constexpr double kRowSumTol = 1e-12;

void validate_markov(const FiniteMarkov& m) {
    if (m.P.empty()) throw std::invalid_argument("FiniteMarkov: empty matrix");
    const std::size_t n = m.P.size();
    for (const auto& row : m.P) {
        if (row.size() != n) throw std::invalid_argument("FiniteMarkov: P not square");
        double sum = 0.0;
        for (double p : row) {
            if (p < 0.0) throw std::invalid_argument("FiniteMarkov: negative entry");
            sum += p;
        }
        if (std::abs(sum - 1.0) > kRowSumTol) {
            throw std::invalid_argument("FiniteMarkov: row does not sum to 1");
        }
    }
    if (!m.prior.empty() && m.prior.size() != n) {
        throw std::invalid_argument("FiniteMarkov: prior size mismatch");
    }
    if (m.step_ticks == 0) throw std::invalid_argument("FiniteMarkov: step_ticks == 0");
}

std::vector<double> markov_prior(const FiniteMarkov& m) {
    if (!m.prior.empty()) return m.prior;
    return std::vector<double>(m.num_states(), 1.0 / static_cast<double>(m.num_states()));
}

// Records sorted by generation time; filtering in g order is exact
// regardless of the reception order.
std::vector<UpdateRecord> by_generation(const History& history) {
    std::vector<UpdateRecord> recs = history.records();
    std::stable_sort(recs.begin(), recs.end(),
                     [](const UpdateRecord& a, const UpdateRecord& b) { return a.g < b.g; });
    return recs;
}

struct OuParams {
    double theta, mu, sigma2;
    double decay(double dt) const { return std::exp(-theta * dt); }
    double stat_var() const { return sigma2 / (2.0 * theta); }
    double trans_var(double dt) const {
        double e2 = std::exp(-2.0 * theta * dt);
        return sigma2 * (1.0 - e2) / (2.0 * theta);
    }
};

}  // namespace

void validate(const ProcessModel& model) {
    std::visit(
        [](const auto& m) {
            using T = std::decay_t<decltype(m)>;
            if constexpr (std::is_same_v<T, Wiener>) {
                if (m.sigma2 < 0.0) throw std::invalid_argument("Wiener: sigma2 < 0");
            } else if constexpr (std::is_same_v<T, OrnsteinUhlenbeck>) {
                if (m.sigma2 <= 0.0) throw std::invalid_argument("OU: sigma2 <= 0");
                if (m.theta <= 0.0) throw std::invalid_argument("OU: theta <= 0");
            } else {
                validate_markov(m);
            }
        },
        model);
}

void History::add(const UpdateRecord& rec) {
    if (rec.r < rec.g) throw std::invalid_argument("UpdateRecord: r < g");
    if (!records_.empty() && rec.r < records_.back().r) {
        throw std::invalid_argument("History: reception times must be non-decreasing");
    }
    records_.push_back(rec);
}

std::optional<UpdateRecord> History::freshest() const {
    if (records_.empty()) return std::nullopt;
    auto it = std::max_element(records_.begin(), records_.end(),
                               [](const UpdateRecord& a, const UpdateRecord& b) {
                                   return a.g < b.g;
                               });
    return *it;
}

void SensorField::check() const {
    if (sensors.empty()) throw std::invalid_argument("SensorField: no sensors");
    if (dimension < 1) throw std::invalid_argument("SensorField: dimension < 1");
    std::vector<bool> covered(static_cast<std::size_t>(dimension), false);
    for (const auto& s : sensors) {
        if (s.component < 0 || s.component >= dimension) {
            throw std::invalid_argument("SensorField: component out of range");
        }
        covered[static_cast<std::size_t>(s.component)] = true;
    }
    if (!std::all_of(covered.begin(), covered.end(), [](bool b) { return b; })) {
        throw std::invalid_argument("SensorField: unobserved component");
    }
}

std::vector<double> markov_power_apply(const std::vector<std::vector<double>>& P,
                                       std::vector<double> row, std::uint64_t steps) {
    const std::size_t n = P.size();
    auto apply = [&](const std::vector<double>& v) {
        std::vector<double> out(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (v[i] == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) out[j] += v[i] * P[i][j];
        }
        return out;
    };
    // Repeated squaring of P for large step counts.
    if (steps > 64) {
        std::vector<std::vector<double>> M = P;
        auto matmul = [n](const std::vector<std::vector<double>>& A,
                          const std::vector<std::vector<double>>& B) {
            std::vector<std::vector<double>> C(n, std::vector<double>(n, 0.0));
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t k = 0; k < n; ++k) {
                    double a = A[i][k];
                    if (a == 0.0) continue;
                    for (std::size_t j = 0; j < n; ++j) C[i][j] += a * B[k][j];
                }
            return C;
        };
        auto vecmat = [n](const std::vector<double>& v,
                          const std::vector<std::vector<double>>& M2) {
            std::vector<double> out(n, 0.0);
            for (std::size_t i = 0; i < n; ++i) {
                if (v[i] == 0.0) continue;
                for (std::size_t j = 0; j < n; ++j) out[j] += v[i] * M2[i][j];
            }
            return out;
        };
        while (steps > 0) {
            if (steps & 1ULL) row = vecmat(row, M);
            steps >>= 1;
            if (steps > 0) M = matmul(M, M);
        }
        // Renormalize against accumulated round-off.
        double s = std::accumulate(row.begin(), row.end(), 0.0);
        if (s > 0.0)
            for (double& x : row) x /= s;
        return row;
    }
    for (std::uint64_t s = 0; s < steps; ++s) row = apply(row);
    return row;
}

std::vector<double> sample_path(const ProcessModel& model,
                                const std::vector<sim::SimTime>& grid,
                                sim::RngStream& rng, sim::TickRate tick) {
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (!(grid[i - 1] < grid[i])) {
            throw std::invalid_argument("sample_path: grid must be strictly increasing");
        }
    }
    std::vector<double> out;
    out.reserve(grid.size());

    if (const auto* w = std::get_if<Wiener>(&model)) {
        double x = w->x0;
        double prev = 0.0;
        for (const auto& t : grid) {
            double dt = tick.to_seconds(t) - prev;
            x += rng.normal(0.0, std::sqrt(w->sigma2 * dt));
            prev = tick.to_seconds(t);
            out.push_back(x);
        }
    } else if (const auto* ou = std::get_if<OrnsteinUhlenbeck>(&model)) {
        OuParams p{ou->theta, ou->mu, ou->sigma2};
        // Start from the stationary law at t = 0.
        double x = rng.normal(p.mu, std::sqrt(p.stat_var()));
        double prev = 0.0;
        for (const auto& t : grid) {
            double dt = tick.to_seconds(t) - prev;
            double m = p.mu + (x - p.mu) * p.decay(dt);
            x = rng.normal(m, std::sqrt(p.trans_var(dt)));
            prev = tick.to_seconds(t);
            out.push_back(x);
        }
    } else {
        const auto& m = std::get<FiniteMarkov>(model);
        validate_markov(m);
        auto prior = markov_prior(m);
        // Sample the initial state from the prior.
        double u = rng.uniform();
        std::size_t state = 0;
        double acc = 0.0;
        for (std::size_t i = 0; i < prior.size(); ++i) {
            acc += prior[i];
            if (u < acc) {
                state = i;
                break;
            }
            state = i;
        }
        std::uint64_t prev_ticks = 0;
        for (const auto& t : grid) {
            std::uint64_t steps = (t.ticks - prev_ticks) / m.step_ticks;
            for (std::uint64_t s = 0; s < steps; ++s) {
                double u2 = rng.uniform();
                double acc2 = 0.0;
                std::size_t next = state;
                for (std::size_t j = 0; j < m.num_states(); ++j) {
                    acc2 += m.P[state][j];
                    if (u2 < acc2) {
                        next = j;
                        break;
                    }
                    next = j;
                }
                state = next;
            }
            prev_ticks = t.ticks;
            out.push_back(static_cast<double>(state));
        }
    }
    return out;
}

GaussianBelief gaussian_predict(const ProcessModel& model, const History& history,
                                sim::SimTime t, sim::TickRate tick) {
    const double ts = tick.to_seconds(t);
    if (const auto* w = std::get_if<Wiener>(&model)) {
        GaussianBelief b{w->x0, 0.0};
        double at = 0.0;  // time of the current belief
        for (const auto& rec : by_generation(history)) {
            double gs = tick.to_seconds(rec.g);
            b.var += w->sigma2 * (gs - at);
            at = gs;
            if (rec.noise_var <= 0.0) {
                b = {rec.y, 0.0};
            } else {
                double k = b.var / (b.var + rec.noise_var);
                b.mean += k * (rec.y - b.mean);
                b.var *= (1.0 - k);
            }
        }
        b.var += w->sigma2 * (ts - at);
        return b;
    }
    if (const auto* ou = std::get_if<OrnsteinUhlenbeck>(&model)) {
        OuParams p{ou->theta, ou->mu, ou->sigma2};
        GaussianBelief b{p.mu, p.stat_var()};
        double at = 0.0;
        for (const auto& rec : by_generation(history)) {
            double gs = tick.to_seconds(rec.g);
            double dt = gs - at;
            double a = p.decay(dt);
            b.mean = p.mu + (b.mean - p.mu) * a;
            b.var = b.var * a * a + p.trans_var(dt);
            at = gs;
            if (rec.noise_var <= 0.0) {
                b = {rec.y, 0.0};
            } else {
                double k = b.var / (b.var + rec.noise_var);
                b.mean += k * (rec.y - b.mean);
                b.var *= (1.0 - k);
            }
        }
        double dt = ts - at;
        double a = p.decay(dt);
        b.mean = p.mu + (b.mean - p.mu) * a;
        b.var = b.var * a * a + p.trans_var(dt);
        return b;
    }
    throw std::invalid_argument("gaussian_predict: not a Gaussian process model");
}

std::vector<double> markov_posterior(const FiniteMarkov& model,
                                     const History& history, sim::SimTime t) {
    validate_markov(model);
    std::vector<double> post = markov_prior(model);
    std::uint64_t at = 0;
    for (const auto& rec : by_generation(history)) {
        std::uint64_t steps = (rec.g.ticks - at) / model.step_ticks;
        post = markov_power_apply(model.P, post, steps);
        at = rec.g.ticks;
        // Noiseless state observation: posterior collapses to the state.
        auto obs = static_cast<std::size_t>(rec.y);
        if (obs >= model.num_states()) {
            throw std::invalid_argument("markov_posterior: observed state out of range");
        }
        std::fill(post.begin(), post.end(), 0.0);
        post[obs] = 1.0;
    }
    std::uint64_t steps = (t.ticks - at) / model.step_ticks;
    return markov_power_apply(model.P, post, steps);
}

double conditional_mean(const ProcessModel& model, const History& history,
                        sim::SimTime t, sim::TickRate tick) {
    if (const auto* m = std::get_if<FiniteMarkov>(&model)) {
        auto post = markov_posterior(*m, history, t);
        auto it = std::max_element(post.begin(), post.end());
        return static_cast<double>(std::distance(post.begin(), it));
    }
    return gaussian_predict(model, history, t, tick).mean;
}

double conditional_mse(const ProcessModel& model, const History& history,
                       sim::SimTime t, sim::TickRate tick) {
    if (const auto* m = std::get_if<FiniteMarkov>(&model)) {
        auto post = markov_posterior(*m, history, t);
        return 1.0 - *std::max_element(post.begin(), post.end());
    }
    return gaussian_predict(model, history, t, tick).var;
}

}  // namespace goalsim::proc
