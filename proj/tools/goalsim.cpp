// Experiment runner: loads a JSON config, applies dotted-path overrides,
// dispatches to a module, and writes config-hash-stamped CSV outputs.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "goalsim/ack/feedback.hpp"
#include "goalsim/air/aircomp.hpp"
#include "goalsim/edge/batch.hpp"
#include "goalsim/mdp/remote_mdp.hpp"
#include "goalsim/policy/scheduling.hpp"
#include "goalsim/sim/csv.hpp"
#include "goalsim/sim/parallel.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace goalsim;

namespace {

json deep_merge(json base, const json& over) {
    if (!base.is_object() || !over.is_object()) return over;
    for (auto it = over.begin(); it != over.end(); ++it) {
        if (base.contains(it.key())) {
            base[it.key()] = deep_merge(base[it.key()], it.value());
        } else {
            base[it.key()] = it.value();
        }
    }
    return base;
}

// "a.b.c=value"; the value parses as JSON when possible, else as a string.
void apply_override(json& cfg, const std::string& kv) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) {
        throw std::invalid_argument("override '" + kv + "' is not of the form path=value");
    }
    std::string path = kv.substr(0, eq);
    std::string raw = kv.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::parse_error&) {
        value = raw;
    }
    json* node = &cfg;
    std::size_t pos = 0;
    while (true) {
        auto dot = path.find('.', pos);
        std::string key = path.substr(pos, dot - pos);
        if (key.empty()) throw std::invalid_argument("override '" + kv + "' has an empty path segment");
        if (dot == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        pos = dot + 1;
    }
}

std::uint64_t config_hash(const json& cfg) { return sim::hash_string(cfg.dump()); }

void write_summary(const fs::path& path, std::uint64_t hash, std::uint64_t seed,
                   const std::vector<std::pair<std::string, double>>& stats) {
    sim::CsvWriter csv(path, "key,value", hash, seed);
    for (const auto& [k, v] : stats) {
        csv.field(k).field(v);
        csv.endrow();
    }
}

proc::ProcessModel parse_process(const json& j) {
    std::string type = j.at("type").get<std::string>();
    if (type == "wiener") {
        proc::Wiener w;
        w.sigma2 = j.value("sigma2", 1.0);
        w.x0 = j.value("x0", 0.0);
        return w;
    }
    if (type == "ou") {
        proc::OrnsteinUhlenbeck ou;
        ou.theta = j.value("theta", 1.0);
        ou.mu = j.value("mu", 0.0);
        ou.sigma2 = j.value("sigma2", 1.0);
        return ou;
    }
    if (type == "markov") {
        proc::FiniteMarkov m;
        m.P = j.at("P").get<std::vector<std::vector<double>>>();
        m.prior = j.value("prior", std::vector<double>{});
        m.step_ticks = j.value("step_ticks", std::uint64_t{1});
        return m;
    }
    throw std::invalid_argument("process.type: unknown value '" + type + "'");
}

policy::SchedulerPolicy parse_policy(const json& j) {
    std::string type = j.at("type").get<std::string>();
    if (type == "periodic_push") {
        return policy::PeriodicPush{j.value("interval_ticks", std::uint64_t{1})};
    }
    if (type == "threshold_push") {
        return policy::ThresholdPush{j.value("threshold", 1.0)};
    }
    if (type == "aoi_pull") {
        return policy::AoIGreedyPull{j.value("weights", std::vector<double>{})};
    }
    if (type == "voi_pull") return policy::VoIGreedyPull{};
    if (type == "random_pull") return policy::RandomPull{};
    throw std::invalid_argument("policy.type: unknown value '" + type + "'");
}

// --- experiment runners ---------------------------------------------------

void run_tracking(const json& cfg, const fs::path& out, std::uint64_t hash,
                  std::uint64_t seed) {
    policy::TrackingConfig tc;
    tc.seed = seed;
    tc.epoch_ticks = cfg.at("epoch_ticks").get<std::uint64_t>();
    tc.duration_ticks = cfg.at("duration_epochs").get<std::uint64_t>() * tc.epoch_ticks;
    for (const auto& p : cfg.at("processes")) {
        tc.component_models.push_back(parse_process(p));
    }
    tc.field.dimension = static_cast<int>(tc.component_models.size());
    for (const auto& s : cfg.at("sensors")) {
        tc.field.sensors.push_back(
            {s.value("component", 0), s.value("noise_var", 0.0)});
    }
    const auto& link = cfg.at("link");
    tc.link.base_delay_ticks = link.value("base_delay_ticks", 0.0);
    tc.link.exp_rate = link.value("exp_rate", 0.0);
    tc.link.erasure_prob = link.value("erasure_prob", 0.0);
    tc.policy = parse_policy(cfg.at("policy"));

    auto result = policy::run_tracking_experiment(tc);

    std::string header = "epoch,t_seconds,chosen_sensor";
    for (std::size_t i = 0; i < tc.field.sensors.size(); ++i) {
        header += ",aoi_" + std::to_string(i) + ",expected_voi_" + std::to_string(i);
    }
    for (int c = 0; c < tc.field.dimension; ++c) {
        header += ",sq_error_" + std::to_string(c);
    }
    sim::CsvWriter csv(out / "tracking.csv", header, hash, seed);
    for (std::size_t e = 0; e < result.epochs.size(); ++e) {
        const auto& row = result.epochs[e];
        csv.field(e + 1).field(tc.tick.to_seconds(row.t)).field(row.chosen_sensor);
        for (std::size_t i = 0; i < tc.field.sensors.size(); ++i) {
            csv.field(row.sensor_aoi[i]).field(row.sensor_expected_voi[i]);
        }
        for (double sq : row.component_sq_error) csv.field(sq);
        csv.endrow();
    }
    write_summary(out / "tracking_summary.csv", hash, seed,
                  {{"mean_sq_error", result.mean_sq_error},
                   {"mean_aoi", result.mean_aoi},
                   {"pulls", static_cast<double>(result.pull_decisions.size())},
                   {"epochs", static_cast<double>(result.epochs.size())}});
}

void run_remote_mdp(const json& cfg, const fs::path& out, std::uint64_t hash,
                    std::uint64_t seed) {
    mdp::GridWorld env;
    env.width = cfg.value("width", 5);
    env.height = cfg.value("height", 5);
    env.target = cfg.value("target", env.width * env.height - 1);
    for (int cell : cfg.value("obstacles", std::vector<int>{})) env.obstacles.insert(cell);
    env.check();

    chan::DiscreteChannel channel;
    channel.q = cfg.value("q", 2u);
    channel.uses_per_message = cfg.value("uses_per_message", 2u);
    const auto episodes = cfg.value("episodes", std::size_t{1000});
    const int step_cap = cfg.value("step_cap", 200);
    const std::string mode = cfg.value("mode", std::string("greedy"));
    sim::RngRoot root(seed);

    sim::CsvWriter csv(out / "remote_mdp.csv",
                       "error_prob,mean_steps,mean_return,success_rate", hash, seed);
    double last_steps = 0.0;
    for (double eps : cfg.value("error_probs", std::vector<double>{0.0})) {
        channel.symbol_error_prob = eps;
        channel.check();
        mdp::MessagePolicy pol;
        if (mode == "greedy") {
            pol = mdp::greedy_guide_policy(env);
        } else if (mode == "qlearn") {
            mdp::QLearnConfig qc;
            auto train_rng = root.substream("train");
            pol = mdp::q_learn_joint(env, channel, qc, train_rng).best_policy;
        } else {
            throw std::invalid_argument("mode: unknown value '" + mode + "'");
        }
        // The evaluation stream restarts per error level, so episode draws
        // are paired across the sweep.
        auto eval_rng = root.substream("eval");
        auto stats = mdp::evaluate_guidance(env, pol, channel, episodes, eval_rng, step_cap);
        csv.field(eps).field(stats.mean_steps).field(stats.mean_return)
            .field(stats.success_rate);
        csv.endrow();
        last_steps = stats.mean_steps;
    }
    write_summary(out / "remote_mdp_summary.csv", hash, seed,
                  {{"final_mean_steps", last_steps}});
}

void run_graph_coding(const json& cfg, const fs::path& out, std::uint64_t hash,
                      std::uint64_t seed) {
    mdp::StateGraph graph;
    graph.adj.resize(cfg.at("num_vertices").get<std::size_t>());
    for (const auto& e : cfg.at("edges")) {
        int u = e.at(0).get<int>();
        graph.adj.at(static_cast<std::size_t>(u))
            .push_back({e.at(1).get<int>(), e.at(2).get<double>()});
    }
    graph.goal = cfg.value("goal", graph.num_vertices() - 1);
    graph.check();
    const int start = cfg.value("start", 0);
    const int budget = cfg.value("budget_bits_per_step", 1);
    const int horizon = cfg.value("horizon", 2);

    sim::CsvWriter csv(
        out / "graph_coding.csv",
        "scheme,transition_cost,total_bits,bits_before_first_action,wait_steps,total_steps",
        hash, seed);
    struct Row {
        const char* name;
        mdp::GuidanceScheme scheme;
        int horizon;
    };
    for (const Row& r : {Row{"per_step", mdp::GuidanceScheme::per_step, 1},
                         Row{"goal_only", mdp::GuidanceScheme::goal_only, 1},
                         Row{"horizon_k", mdp::GuidanceScheme::horizon_k, horizon}}) {
        auto cost = mdp::guidance_code_cost(graph, start, r.scheme, r.horizon, budget);
        csv.field(std::string(r.name)).field(cost.transition_cost).field(cost.total_bits)
            .field(cost.bits_before_first_action).field(cost.wait_steps)
            .field(cost.total_steps);
        csv.endrow();
    }
    auto oracle = mdp::guidance_oracle(graph, start, budget);
    csv.field(std::string("oracle")).field(oracle.transition_cost).field(0.0).field(0.0)
        .field(oracle.wait_steps).field(oracle.total_steps);
    csv.endrow();
    write_summary(out / "graph_coding_summary.csv", hash, seed,
                  {{"oracle_cost", oracle.transition_cost},
                   {"oracle_steps", static_cast<double>(oracle.total_steps)}});
}

void run_aircomp(const json& cfg, const fs::path& out, std::uint64_t hash,
                 std::uint64_t seed) {
    const auto batches = cfg.value("batches", std::size_t{1000});
    const auto devices = cfg.value("devices", std::size_t{8});
    const auto dimension = cfg.value("dimension", std::size_t{16});
    const double noise_var = cfg.value("noise_var", 0.0);
    const auto noise_reps = cfg.value("noise_reps", std::size_t{0});
    auto p_values = cfg.value("p_values", std::vector<double>{1, 2, 4, 8, 16, 32, 64});

    sim::RngRoot root(seed);
    auto batch_rng = root.substream("batches");
    std::vector<air::FeatureBatch> pool;
    for (std::size_t b = 0; b < batches; ++b) {
        air::FeatureBatch fb;
        fb.features.assign(devices, std::vector<double>(dimension));
        for (auto& dev : fb.features) {
            // Normalized feature maps: values in [0, 1) keep the power of
            // the pre-processed symbols x^p bounded for every exponent.
            for (auto& x : dev) x = batch_rng.uniform();
        }
        pool.push_back(std::move(fb));
    }

    chan::GaussianMAC mac;
    mac.device_count = devices;
    mac.noise_var = noise_var;

    sim::CsvWriter csv(out / "aircomp.csv", "p,mean_max_error,mean_output_variance",
                       hash, seed);
    auto noise_base = root.substream("noise");
    for (double p : p_values) {
        double err_sum = 0.0;
        for (const auto& fb : pool) err_sum += air::max_approx_error(fb, p);
        double var_mean = 0.0;
        if (noise_reps > 1 && noise_var > 0.0) {
            air::PoolingConfig pc{p, air::PoolingMode::max_approx};
            const auto& fb = pool.front();
            std::vector<std::vector<double>> outs;
            for (std::size_t r = 0; r < noise_reps; ++r) {
                // Re-forking per rep pairs the noise draws across p.
                auto rng = noise_base.fork(r);
                outs.push_back(air::air_pool(fb, pc, mac, rng));
            }
            for (std::size_t i = 0; i < dimension; ++i) {
                std::vector<double> comp;
                for (const auto& o : outs) comp.push_back(o[i]);
                var_mean += sim::variance_of(comp);
            }
            var_mean /= static_cast<double>(dimension);
        }
        csv.field(p).field(err_sum / static_cast<double>(batches)).field(var_mean);
        csv.endrow();
    }
    write_summary(out / "aircomp_summary.csv", hash, seed,
                  {{"batches", static_cast<double>(batches)}});
}

void run_feel(const json& cfg, const fs::path& out, std::uint64_t hash,
              std::uint64_t seed) {
    air::FeelTaskConfig task;
    const json& t = cfg.at("task");
    task.dimension = t.value("dimension", std::size_t{20});
    task.devices = t.value("devices", std::size_t{20});
    task.samples_per_device = t.value("samples_per_device", std::size_t{50});
    task.rounds = t.value("rounds", std::size_t{200});
    task.learning_rate = t.value("learning_rate", 0.5);
    task.obda_learning_rate = t.value("obda_learning_rate", 0.02);
    task.heterogeneity = t.value("heterogeneity", 1.0);
    task.block_len = t.value("block_len", std::size_t{5});
    task.codebook_bits = t.value("codebook_bits", std::size_t{6});
    task.warmup_rounds = t.value("warmup_rounds", std::size_t{10});
    std::string det = t.value("detector", std::string("genie"));
    if (det == "genie") {
        task.detector = air::GdoacDetector::genie;
    } else if (det == "matched_filter") {
        task.detector = air::GdoacDetector::matched_filter;
    } else {
        throw std::invalid_argument("task.detector: unknown value '" + det + "'");
    }

    sim::CsvWriter csv(out / "feel.csv", "scheme,round,loss,accuracy", hash, seed);
    std::vector<std::pair<std::string, double>> finals;
    for (const auto& name : cfg.value(
             "schemes", std::vector<std::string>{"centralized", "pa", "obda", "gdoac"})) {
        air::FeelCurve curve;
        if (name == "centralized") {
            curve = air::train_centralized(task, seed);
        } else if (name == "pa") {
            curve = air::train_feel(task, air::FeelScheme::PA, seed);
        } else if (name == "obda") {
            curve = air::train_feel(task, air::FeelScheme::OBDA, seed);
        } else if (name == "gdoac") {
            curve = air::train_feel(task, air::FeelScheme::GDOAC, seed);
        } else {
            throw std::invalid_argument("schemes: unknown value '" + name + "'");
        }
        for (std::size_t r = 0; r < curve.loss.size(); ++r) {
            csv.field(name).field(r + 1).field(curve.loss[r]).field(curve.accuracy[r]);
            csv.endrow();
        }
        finals.emplace_back("final_loss_" + name, curve.loss.back());
    }
    write_summary(out / "feel_summary.csv", hash, seed, finals);
}

void run_feedback(const json& cfg, const fs::path& out, std::uint64_t hash,
                  std::uint64_t seed) {
    const auto population = cfg.value("population", std::uint64_t{1} << 32);
    const auto k_start = cfg.value("k_start", std::size_t{20});
    const auto k_stop = cfg.value("k_stop", std::size_t{500});
    const auto k_step = cfg.value("k_step", std::size_t{20});
    const auto fa_probes = cfg.value("fa_probes", std::size_t{10000});
    if (k_step == 0 || k_start == 0 || k_stop < k_start) {
        throw std::invalid_argument("k_start/k_stop/k_step: invalid sweep range");
    }
    std::vector<std::size_t> ks;
    for (std::size_t k = k_start; k <= k_stop; k += k_step) ks.push_back(k);

    sim::CsvWriter csv(out / "feedback.csv", "eps,k,scheme,b_bits,fa_rate", hash, seed);
    for (double eps : cfg.value("eps", std::vector<double>{1e-2, 1e-4})) {
        auto rows = ack::sweep(ks, population, eps, fa_probes, seed);
        for (const auto& row : rows) {
            csv.field(eps).field(row.k).field(row.scheme).field(row.b_bits)
                .field(row.fa_rate);
            csv.endrow();
        }
        for (std::size_t k : ks) {
            auto b = ack::bounds(population, k, eps);
            csv.field(eps).field(k).field(std::string("bound_errorfree"))
                .field(b.b_errorfree).field(0.0);
            csv.endrow();
            csv.field(eps).field(k).field(std::string("bound_fa")).field(b.b_fa)
                .field(0.0);
            csv.endrow();
        }
    }
    write_summary(out / "feedback_summary.csv", hash, seed,
                  {{"k_count", static_cast<double>(ks.size())}});
}

void run_edge_batch(const json& cfg, const fs::path& out, std::uint64_t hash,
                    std::uint64_t seed) {
    edge::ModelProfile profile;
    profile.a = cfg.value("a", std::vector<double>{4, 4, 4});
    profile.c = cfg.value("c", std::vector<double>{1, 1, 1});
    profile.check();
    const double lambda = cfg.value("lambda", 0.15);
    const double duration = cfg.value("duration", 2000.0);
    const double uplink_time = cfg.value("uplink_time", 0.0);
    const double tau = cfg.value("tau", 0.0);
    const bool early_exit = cfg.value("early_exit", true);
    const std::string policy_name = cfg.value("policy", std::string("fixed"));
    auto exit_probs = cfg.value("exit_probs", std::vector<double>(profile.blocks(), 1.0));

    sim::RngRoot root(seed);
    auto workload_rng = root.substream("workload");
    auto workload =
        edge::make_workload(lambda, duration, exit_probs, uplink_time, workload_rng);

    sim::CsvWriter csv(out / "edge_batch.csv",
                       "b_max,completed,mean_latency,p95_latency,throughput,unstable",
                       hash, seed);
    for (std::size_t b : cfg.value("b_max_values",
                                   std::vector<std::size_t>{1, 2, 4, 8, 16, 32})) {
        edge::BatchPolicy policy;
        if (policy_name == "fixed") {
            policy = edge::FixedSize{b};
        } else if (policy_name == "timeout") {
            policy = edge::Timeout{b, tau};
        } else {
            throw std::invalid_argument("policy: unknown value '" + policy_name + "'");
        }
        auto res = edge::simulate(profile, policy, workload, duration, early_exit);
        csv.field(b).field(res.completed).field(res.mean_latency).field(res.p95_latency)
            .field(res.throughput).field(static_cast<int>(res.unstable));
        csv.endrow();
    }
    write_summary(out / "edge_batch_summary.csv", hash, seed,
                  {{"tasks", static_cast<double>(workload.size())}});
}

// --- dispatch -------------------------------------------------------------

struct Experiment {
    std::string name;
    json defaults;
    void (*run)(const json&, const fs::path&, std::uint64_t, std::uint64_t);
};

std::vector<Experiment> catalog() {
    std::vector<Experiment> exps;
    exps.push_back(
        {"tracking",
         json{{"seed", 1},
              {"epoch_ticks", 10},
              {"duration_epochs", 1000},
              {"processes", json::array({{{"type", "wiener"}, {"sigma2", 1.0}, {"x0", 0.0}}})},
              {"sensors", json::array({{{"component", 0}, {"noise_var", 0.0}}})},
              {"policy", {{"type", "voi_pull"}}},
              {"link", {{"base_delay_ticks", 0.0}, {"exp_rate", 0.0}, {"erasure_prob", 0.0}}}},
         &run_tracking});
    exps.push_back({"remote-mdp",
                    json{{"seed", 1},
                         {"width", 5},
                         {"height", 5},
                         {"obstacles", json::array()},
                         {"target", 24},
                         {"mode", "greedy"},
                         {"episodes", 1000},
                         {"step_cap", 200},
                         {"q", 2},
                         {"uses_per_message", 2},
                         {"error_probs", {0.0, 0.05, 0.1, 0.2}}},
                    &run_remote_mdp});
    exps.push_back({"graph-coding",
                    json{{"seed", 1},
                         {"num_vertices", 6},
                         {"edges",
                          json::array({{0, 1, 1.0},
                                       {0, 2, 2.0},
                                       {1, 3, 1.0},
                                       {2, 3, 1.0},
                                       {3, 4, 1.0},
                                       {3, 5, 1.0},
                                       {4, 5, 1.0}})},
                         {"goal", 5},
                         {"start", 0},
                         {"budget_bits_per_step", 1},
                         {"horizon", 2}},
                    &run_graph_coding});
    exps.push_back({"aircomp",
                    json{{"seed", 1},
                         {"batches", 1000},
                         {"devices", 8},
                         {"dimension", 16},
                         {"p_values", {1, 2, 4, 8, 16, 32, 64}},
                         {"noise_var", 0.0},
                         {"noise_reps", 0}},
                    &run_aircomp});
    exps.push_back({"feel",
                    json{{"seed", 1},
                         {"schemes", {"centralized", "pa", "obda", "gdoac"}},
                         {"task",
                          {{"dimension", 20},
                           {"devices", 20},
                           {"samples_per_device", 50},
                           {"rounds", 200},
                           {"learning_rate", 0.5},
                           {"obda_learning_rate", 0.02},
                           {"heterogeneity", 1.0},
                           {"block_len", 5},
                           {"codebook_bits", 6},
                           {"warmup_rounds", 10},
                           {"detector", "genie"}}}},
                    &run_feel});
    exps.push_back({"feedback",
                    json{{"seed", 1},
                         {"population", std::uint64_t{1} << 32},
                         {"k_start", 20},
                         {"k_stop", 500},
                         {"k_step", 20},
                         {"eps", {1e-2, 1e-4}},
                         {"fa_probes", 10000}},
                    &run_feedback});
    exps.push_back({"edge-batch",
                    json{{"seed", 1},
                         {"lambda", 0.15},
                         {"duration", 2000.0},
                         {"a", {4.0, 4.0, 4.0}},
                         {"c", {1.0, 1.0, 1.0}},
                         {"exit_probs", {0.4, 0.3, 0.3}},
                         {"uplink_time", 0.0},
                         {"policy", "fixed"},
                         {"tau", 0.0},
                         {"early_exit", true},
                         {"b_max_values", {1, 2, 4, 8, 16, 32}}},
                    &run_edge_batch});
    return exps;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"goalsim: deterministic experiments in goal-oriented communication"};
    app.require_subcommand(1);

    auto* list = app.add_subcommand("list", "catalog of experiment kinds and parameters");
    bool list_json = false;
    list->add_flag("--json", list_json, "machine-readable output");

    struct SubArgs {
        std::string config;
        std::string out;
        std::int64_t seed = -1;
        std::size_t replications = 1;
        std::vector<std::string> overrides;
    };
    auto exps = catalog();
    std::vector<SubArgs> args(exps.size());
    for (std::size_t i = 0; i < exps.size(); ++i) {
        auto* sub = app.add_subcommand(exps[i].name, "run the " + exps[i].name + " experiment");
        sub->add_option("--config", args[i].config, "JSON config file");
        sub->add_option("--out", args[i].out, "output directory (default $GOALSIM_OUT or ./out)");
        sub->add_option("--seed", args[i].seed, "root seed override");
        sub->add_option("--replications", args[i].replications, "independent replications");
        sub->add_option("--set", args[i].overrides, "dotted-path override, path=value");
    }

    CLI11_PARSE(app, argc, argv);

    if (list->parsed()) {
        if (list_json) {
            json j = json::object();
            for (const auto& e : exps) j[e.name] = e.defaults;
            std::cout << j.dump(2) << "\n";
        } else {
            for (const auto& e : exps) {
                std::cout << e.name << "\n  defaults: " << e.defaults.dump() << "\n";
            }
        }
        return 0;
    }

    for (std::size_t i = 0; i < exps.size(); ++i) {
        auto* sub = app.get_subcommand(exps[i].name);
        if (!sub->parsed()) continue;
        const auto& a = args[i];

        json cfg = exps[i].defaults;
        try {
            if (!a.config.empty()) {
                std::ifstream in(a.config);
                if (!in) throw std::invalid_argument("cannot open config file: " + a.config);
                cfg = deep_merge(cfg, json::parse(in));
            }
            for (const auto& kv : a.overrides) apply_override(cfg, kv);
            if (a.seed >= 0) cfg["seed"] = static_cast<std::uint64_t>(a.seed);
        } catch (const std::exception& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 1;
        }

        std::string out_dir = a.out;
        if (out_dir.empty()) {
            const char* env = std::getenv("GOALSIM_OUT");
            out_dir = env ? env : "out";
        }

        const std::uint64_t hash = config_hash(cfg);
        const auto base_seed = cfg.value("seed", std::uint64_t{1});
        try {
            for (std::size_t r = 0; r < a.replications; ++r) {
                fs::path dir = out_dir;
                if (a.replications > 1) dir /= "rep" + std::to_string(r);
                fs::create_directories(dir);
                fs::path marker = dir / "FAILED";
                try {
                    exps[i].run(cfg, dir, hash, base_seed + r);
                    fs::remove(marker);
                } catch (...) {
                    std::ofstream(marker) << "run failed; outputs may be partial\n";
                    throw;
                }
            }
        } catch (const std::invalid_argument& e) {
            std::cerr << "validation error: " << e.what() << "\n";
            return 1;
        } catch (const std::exception& e) {
            std::cerr << "runtime error: " << e.what() << "\n";
            return 2;
        }
        return 0;
    }
    return 0;
}
