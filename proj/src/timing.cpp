#include "goalsim/metrics/timing.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "goalsim/sim/parallel.hpp"

namespace goalsim::metrics {

namespace {

bool same_record(const proc::UpdateRecord& a, const proc::UpdateRecord& b) {
    return a.y == b.y && a.g == b.g && a.sensor_id == b.sensor_id &&
           a.noise_var == b.noise_var;
}

// History plus y_new, keeping reception order valid. A duplicate of an
// existing record leaves the history unchanged.
proc::History with_update(const proc::History& history, const proc::UpdateRecord& y_new) {
    for (const auto& rec : history.records()) {
        if (same_record(rec, y_new)) return history;
    }
    std::vector<proc::UpdateRecord> recs = history.records();
    auto pos = std::upper_bound(recs.begin(), recs.end(), y_new,
                                [](const proc::UpdateRecord& a, const proc::UpdateRecord& b) {
                                    return a.r < b.r;
                                });
    recs.insert(pos, y_new);
    proc::History out;
    for (const auto& r : recs) out.add(r);
    return out;
}

double point_error(const proc::ProcessModel& model, double x_true, double estimate) {
    if (std::holds_alternative<proc::FiniteMarkov>(model)) {
        return x_true == estimate ? 0.0 : 1.0;  // 0/1 loss on the MAP state
    }
    double d = x_true - estimate;
    return d * d;
}

struct StepLaw {
    double decay;      // multiplier on (x - mu)
    double mu;         // attractor (0-effect for Wiener)
    double noise_std;  // transition noise std over the step
};

StepLaw step_law(const proc::ProcessModel& model, double dt) {
    if (const auto* w = std::get_if<proc::Wiener>(&model)) {
        return {1.0, 0.0, std::sqrt(w->sigma2 * dt)};
    }
    const auto& ou = std::get<proc::OrnsteinUhlenbeck>(model);
    double a = std::exp(-ou.theta * dt);
    double var = ou.sigma2 * (1.0 - a * a) / (2.0 * ou.theta);
    return {a, ou.mu, std::sqrt(var)};
}

}  // namespace

std::string to_string(MetricKind k) {
    switch (k) {
        case MetricKind::latency: return "latency";
        case MetricKind::aoi: return "aoi";
        case MetricKind::voi_semantic: return "voi_semantic";
        case MetricKind::voi_pull: return "voi_pull";
        case MetricKind::voi_pragmatic: return "voi_pragmatic";
    }
    return "unknown";
}

double latency(const proc::UpdateRecord& record, sim::TickRate tick) {
    if (record.r < record.g) throw std::invalid_argument("latency: r < g");
    return tick.to_seconds(record.r - record.g);
}

double aoi(const proc::History& history, sim::SimTime t, sim::TickRate tick,
           sim::SimTime prior_t0) {
    auto freshest = history.freshest();
    if (!freshest) return tick.to_seconds(t) - tick.to_seconds(prior_t0);
    return tick.to_seconds(t) - tick.to_seconds(freshest->g);
}

double semantic_voi(const proc::ProcessModel& model, const proc::History& history,
                    const proc::UpdateRecord& y_new, double x_true, sim::SimTime t,
                    sim::TickRate tick) {
    double pre = point_error(model, x_true, proc::conditional_mean(model, history, t, tick));
    proc::History augmented = with_update(history, y_new);
    double post =
        point_error(model, x_true, proc::conditional_mean(model, augmented, t, tick));
    return pre - post;
}

double expected_voi(const proc::ProcessModel& model, const proc::History& history,
                    sim::SimTime t, double obs_noise_var, sim::TickRate tick) {
    if (const auto* m = std::get_if<proc::FiniteMarkov>(&model)) {
        // Noiseless state observation collapses the posterior, so the
        // post-update 0/1 loss is zero.
        auto post = proc::markov_posterior(*m, history, t);
        return 1.0 - *std::max_element(post.begin(), post.end());
    }
    double v = proc::gaussian_predict(model, history, t, tick).var;
    if (obs_noise_var <= 0.0) return v;
    // Prior MSE minus expected posterior MSE of the Kalman update.
    return v * v / (v + obs_noise_var);
}

NestedMcResult expected_voi_mc(const proc::ProcessModel& model,
                               const proc::History& history, sim::SimTime t,
                               double obs_noise_var, sim::RngStream& rng,
                               NestedMcConfig cfg, sim::TickRate tick) {
    const sim::RngStream base = rng.fork(rng.next_u64());
    std::vector<double> outer_vals;

    if (const auto* m = std::get_if<proc::FiniteMarkov>(&model)) {
        auto prior = proc::markov_posterior(*m, history, t);
        auto map_state = static_cast<double>(std::distance(
            prior.begin(), std::max_element(prior.begin(), prior.end())));
        outer_vals = sim::ensemble_serial(
            cfg.outer, base, [&](std::size_t, sim::RngStream& r) {
                double u = r.uniform();
                double acc = 0.0;
                std::size_t s = 0;
                for (std::size_t i = 0; i < prior.size(); ++i) {
                    acc += prior[i];
                    if (u < acc) {
                        s = i;
                        break;
                    }
                    s = i;
                }
                double pre = (static_cast<double>(s) == map_state) ? 0.0 : 1.0;
                return pre;  // post-update loss is 0 under noiseless observation
            });
    } else {
        auto prior = proc::gaussian_predict(model, history, t, tick);
        outer_vals = sim::ensemble_serial(
            cfg.outer, base, [&](std::size_t, sim::RngStream& r) {
                double x = r.normal(prior.mean, std::sqrt(prior.var));
                double pre = (x - prior.mean) * (x - prior.mean);
                double post_sum = 0.0;
                for (std::size_t j = 0; j < cfg.inner; ++j) {
                    double y = obs_noise_var > 0.0
                                   ? r.normal(x, std::sqrt(obs_noise_var))
                                   : x;
                    double k = obs_noise_var > 0.0
                                   ? prior.var / (prior.var + obs_noise_var)
                                   : 1.0;
                    double post_mean = prior.mean + k * (y - prior.mean);
                    post_sum += (x - post_mean) * (x - post_mean);
                }
                return pre - post_sum / static_cast<double>(cfg.inner);
            });
    }
    return {sim::mean_of(outer_vals), sim::stderr_of(outer_vals)};
}

double pragmatic_voi(const proc::ProcessModel& model, const proc::History& history,
                     const proc::UpdateRecord& y_new, sim::SimTime t,
                     const Controller& controller, const PragmaticConfig& cfg,
                     sim::RngStream& rng, sim::TickRate tick) {
    if (cfg.horizon_steps <= 0) {
        throw std::invalid_argument("pragmatic_voi: horizon must be positive");
    }
    if (std::holds_alternative<proc::FiniteMarkov>(model)) {
        throw std::invalid_argument("pragmatic_voi: Gaussian models only");
    }
    proc::History augmented = with_update(history, y_new);
    auto belief_wo = proc::gaussian_predict(model, history, t, tick);
    auto belief_w = proc::gaussian_predict(model, augmented, t, tick);
    StepLaw law = step_law(model, cfg.step_seconds);

    const sim::RngStream base = rng.fork(rng.next_u64());
    auto vals = sim::ensemble_parallel(
        cfg.rollouts, base, [&](std::size_t, sim::RngStream& r) {
            // True state sampled from the fuller information set.
            double x = r.normal(belief_w.mean, std::sqrt(belief_w.var));
            double m_wo = belief_wo.mean;
            double m_w = belief_w.mean;
            double cost_wo = 0.0, cost_w = 0.0;
            for (int j = 0; j < cfg.horizon_steps; ++j) {
                // Common random numbers: the same process noise drives
                // both branches.
                double z = r.normal();
                x = law.mu + (x - law.mu) * law.decay + law.noise_std * z;
                m_wo = law.mu + (m_wo - law.mu) * law.decay;
                m_w = law.mu + (m_w - law.mu) * law.decay;
                cost_wo += controller.cost(x, controller.act(m_wo));
                cost_w += controller.cost(x, controller.act(m_w));
            }
            return cost_wo - cost_w;
        });
    return sim::mean_of(vals);
}

}  // namespace goalsim::metrics
