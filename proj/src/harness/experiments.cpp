#include "matsg/harness/experiments.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "matsg/core/error.hpp"
#include "matsg/dsl/parser.hpp"
#include "matsg/harness/analysis.hpp"
#include "matsg/harness/plot.hpp"

namespace matsg::harness {

namespace fs = std::filesystem;
using curriculum::Method;

namespace {

// Consecutive faulted iterations tolerated before a run is abandoned.
constexpr std::size_t kMaxConsecutiveFaults = 100;

std::string actions_run_id(sim::ActionSpace s) { return "actions/" + std::string(sim::action_space_name(s)); }
std::string ued_run_id(Method m) { return "ued/" + std::string(curriculum::method_name(m)); }

// `ued/DCD` -> `DCD` for file names.
std::string file_stem(const std::string& run, std::uint64_t seed) {
    const auto slash = run.find('/');
    return (slash == std::string::npos ? run : run.substr(slash + 1)) + "_s" + std::to_string(seed);
}

dsl::ScenarioParams dr_sample(const dsl::ScenarioSpec& spec, Rng& rng) {
    auto dist = dsl::uniform_distribution(spec);
    dist.uniform_ranges = true;
    return dsl::sample_params(spec, dist, rng);
}

void log_holdout(const ExperimentConfig& cfg, sim::IntersectionEnv& env, const Trainer& trainer,
                 const std::vector<dsl::ScenarioParams>& holdout, const std::string& run, std::uint64_t seed,
                 std::uint64_t step, MetricsLog& log) {
    const auto stats = learn::pool(
        learn::evaluate_policy(env, trainer.network_map(), holdout, cfg.eval_episodes, mix_seed(seed, 3)));
    log.add(run, seed, step, "holdout_return", stats.mean_return);
    log.add(run, seed, step, "holdout_completion", stats.route_completion);
    log.add(run, seed, step, "holdout_collisions", stats.collisions);
}

void save_networks(const std::string& dir, const std::string& stem, const std::vector<learn::PolicyNetwork>& nets) {
    fs::create_directories(dir);
    for (std::size_t a = 0; a < nets.size(); ++a)
        learn::save_checkpoint(nets[a], dir + "/" + stem + "_a" + std::to_string(a) + ".mgpp");
}

// Mean and spread over seeds of one metric per step for each run.
std::vector<Series> seed_curves(const std::vector<MetricsRow>& rows, const std::string& metric) {
    std::vector<std::string> runs;
    std::map<std::string, std::map<std::uint64_t, std::vector<double>>> by;
    for (const auto& r : rows) {
        if (r.metric != metric) continue;
        if (!by.count(r.run)) runs.push_back(r.run);
        by[r.run][r.step].push_back(r.value);
    }
    std::vector<Series> out;
    for (const auto& run : runs) {
        Series s{run, {}, {}, {}};
        for (const auto& [step, vals] : by[run]) {
            double m = 0.0, v = 0.0;
            for (double x : vals) m += x / static_cast<double>(vals.size());
            for (double x : vals) v += (x - m) * (x - m) / static_cast<double>(vals.size());
            s.x.push_back(static_cast<double>(step));
            s.y.push_back(m);
            s.spread.push_back(std::sqrt(v));
        }
        out.push_back(std::move(s));
    }
    return out;
}

// Per-seed bins collapsed to one curve per run: mean over seeds of the bin means.
std::vector<Series> binned_curves(const std::vector<BinnedRow>& rows, const std::string& metric) {
    std::vector<MetricsRow> flat;
    for (const auto& b : rows)
        if (b.metric == metric) flat.push_back({b.run, b.seed, b.last_step, metric, b.mean});
    return seed_curves(flat, metric);
}

}  // namespace

void write_text(const std::string& path, std::string_view text) {
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty()) fs::create_directories(parent);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write '" + path + "'");
    out << text;
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read '" + path + "'");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Context load_context(const ExperimentConfig& cfg) {
    Context ctx;
    ctx.spec = dsl::load_spec_or_throw(cfg.scenario_file);
    if (!cfg.map_file.empty())
        ctx.map = std::make_shared<const sim::RoadMap>(sim::load_map(cfg.map_file));
    else
        ctx.map = sim::resolve_map(ctx.spec.map_id, fs::path(cfg.scenario_file).parent_path().string());
    return ctx;
}

std::vector<dsl::ScenarioParams> make_holdout(const dsl::ScenarioSpec& spec) {
    auto bound = [&](dsl::Knob k) -> const std::string* {
        const auto it = spec.bindings.find(k);
        return it == spec.bindings.end() ? nullptr : &it->second;
    };
    const auto* route = bound(dsl::Knob::route);
    const auto* npcs = bound(dsl::Knob::npc_count);
    if (!route || !npcs) throw Error("the holdout set needs route and npc_count bindings");
    std::map<std::string, dsl::ParamValue> base;
    for (const auto& p : spec.params) {
        std::visit(
            [&](const auto& d) {
                using D = std::decay_t<decltype(d)>;
                if constexpr (std::is_same_v<D, dsl::CategoricalDomain>) base[p.name] = d.values.front();
                else if constexpr (std::is_same_v<D, dsl::IntegerRange>) base[p.name] = (d.lo + d.hi) / 2;
                else if constexpr (std::is_same_v<D, dsl::RealRange>) base[p.name] = (d.lo + d.hi) / 2.0;
                else base[p.name] = false;
            },
            p.kind);
    }
    for (auto k : {dsl::Knob::keeps_safety_distance, dsl::Knob::respects_traffic_lights})
        if (const auto* name = bound(k)) base[*name] = true;
    std::vector<dsl::ScenarioParams> out;
    for (const char* m : {"straight", "left", "right"}) {
        for (std::int64_t n : {0, 2, 4, 6}) {
            dsl::ScenarioParams p{spec.id, base, dsl::kReservedSeedBit | static_cast<std::uint64_t>(out.size() + 1)};
            p.assignment[*route] = std::string(m);
            p.assignment[*npcs] = n;
            dsl::validate_params(spec, p);
            out.push_back(std::move(p));
        }
    }
    return out;
}

std::string format_params_csv(const std::vector<dsl::ScenarioParams>& params) {
    std::string out = "assignment,seed\n";
    for (const auto& p : params) out += dsl::format_assignment(p.assignment) + "," + std::to_string(p.seed) + "\n";
    return out;
}

std::vector<dsl::ScenarioParams> parse_params_csv(std::string_view text, const std::string& spec_id) {
    std::istringstream in{std::string(text)};
    std::string line;
    std::vector<dsl::ScenarioParams> out;
    if (!std::getline(in, line) || line != "assignment,seed") throw Error("scenario list: bad header");
    int n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        const auto comma = line.rfind(',');
        if (comma == std::string::npos) throw Error("scenario list line " + std::to_string(n) + ": expected 2 columns");
        dsl::ScenarioParams p;
        p.spec_id = spec_id;
        p.assignment = dsl::parse_assignment(std::string_view(line).substr(0, comma));
        try {
            p.seed = std::stoull(line.substr(comma + 1));
        } catch (const std::exception&) {
            throw Error("scenario list line " + std::to_string(n) + ": malformed seed");
        }
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<UpdateMetrics> train_action_space(const ExperimentConfig& cfg, const Context& ctx, sim::ActionSpace space,
                                              std::uint64_t seed, MetricsLog& log,
                                              std::vector<learn::PolicyNetwork>* final_networks) {
    const auto run = actions_run_id(space);
    const auto salt = static_cast<std::uint64_t>(space);
    sim::IntersectionEnv env(ctx.map, ctx.spec, space);
    learn::PpoConfig ppo = cfg.ppo;
    ppo.updates = cfg.updates;
    Trainer trainer(env, static_cast<std::size_t>(ctx.spec.ego.count), cfg.hidden, ppo, mix_seed(seed, 200 + salt));
    Rng rng(mix_seed(seed, 100 + salt));
    std::vector<UpdateMetrics> out;
    for (std::size_t u = 1; u <= cfg.updates; ++u) {
        const auto st = trainer.train_step([&](std::size_t) { return dr_sample(ctx.spec, rng); }, rng, cfg.freeze_policy);
        out.push_back({st.mean_return, st.collisions, st.completion});
        log.add(run, seed, u, "return", st.mean_return);
        log.add(run, seed, u, "collisions", st.collisions);
        log.add(run, seed, u, "completion", st.completion);
        log.add(run, seed, u, "episodes", static_cast<double>(st.episodes));
        if (st.updated) {
            log.add(run, seed, u, "policy_loss", st.loss.policy_loss);
            log.add(run, seed, u, "value_loss", st.loss.value_loss);
            log.add(run, seed, u, "entropy", st.loss.entropy);
        }
    }
    if (final_networks) *final_networks = trainer.networks();
    return out;
}

UedRun run_curriculum(const ExperimentConfig& cfg, const Context& ctx, Method method, std::uint64_t seed,
                      MetricsLog& log, std::size_t max_generated) {
    auto ccfg = cfg.curriculum;
    ccfg.method = method;
    UedRun out{ued_run_id(method), seed, curriculum::initial_state(ctx.spec, ccfg, mix_seed(seed, 1)), {}, {}, 0, {}};
    sim::IntersectionEnv env(ctx.map, ctx.spec, cfg.action_space);
    learn::PpoConfig ppo = cfg.ppo;
    ppo.updates = cfg.updates;
    Trainer trainer(env, static_cast<std::size_t>(ctx.spec.ego.count), cfg.hidden, ppo, mix_seed(seed, 2));
    const bool evaluating = cfg.eval_every > 0;
    const auto holdout = evaluating ? make_holdout(ctx.spec) : std::vector<dsl::ScenarioParams>{};
    if (evaluating) log_holdout(cfg, env, trainer, holdout, out.run, seed, 0, log);

    const auto runner = [&](const dsl::ScenarioParams& p, std::uint64_t rollout_seed) {
        Rng rng(rollout_seed);
        const auto st = trainer.train_step([&](std::size_t) { return p; }, rng, cfg.freeze_policy);
        curriculum::RunOutcome o;
        o.values = st.values;
        o.episode_returns = st.episode_returns;
        o.env_steps = st.transitions;
        o.policy_loss = st.loss.policy_loss;
        o.value_loss = st.loss.value_loss;
        o.entropy = st.loss.entropy;
        return o;
    };

    const bool by_generated = max_generated > 0;
    const double budget = by_generated ? static_cast<double>(max_generated) : static_cast<double>(cfg.env_steps);
    auto progress = [&] { return by_generated ? static_cast<double>(out.generated) : static_cast<double>(out.state.step); };
    auto done = [&] { return progress() >= budget; };
    std::vector<dsl::ScenarioParams> window;
    std::size_t faults_in_row = 0, iterations = 0;
    while (!done()) {
        auto rec = curriculum::dcd_iteration(out.state, ctx.spec, ccfg, runner);
        ++iterations;
        if (rec.params.seed & dsl::kReservedSeedBit) throw Error("a holdout seed reached training");
        if (rec.source == curriculum::Source::generated) {
            ++out.generated;
            window.push_back(rec.params);
        }
        const auto step = out.state.step;
        if (rec.faulted) {
            log.add(out.run, seed, step, "fault", 1.0);
            if (++faults_in_row >= kMaxConsecutiveFaults) throw Error("too many consecutive faulted scenarios: " + rec.fault);
        } else {
            faults_in_row = 0;
            log.add(out.run, seed, step, "train_return", rec.mean_return);
            log.add(out.run, seed, step, "regret", rec.regret);
            if (!cfg.freeze_policy) {
                log.add(out.run, seed, step, "policy_loss", rec.policy_loss);
                log.add(out.run, seed, step, "value_loss", rec.value_loss);
                log.add(out.run, seed, step, "entropy", rec.entropy);
            }
        }
        out.records.push_back(std::move(rec));
        if (evaluating && iterations % cfg.eval_every == 0) {
            log_holdout(cfg, env, trainer, holdout, out.run, seed, step, log);
            if (method != Method::dr) log.add(out.run, seed, step, "buffer_regret", out.state.buffer.mean_regret());
        }
        while (out.checkpoints.size() < cfg.checkpoints) {
            const std::size_t k = out.checkpoints.size() + 1;
            if (progress() < budget * static_cast<double>(k) / static_cast<double>(cfg.checkpoints)) break;
            Checkpoint c{k, step, method == Method::dr ? std::string() : out.state.buffer.to_csv(),
                         curriculum::format_generator(ctx.spec, out.state.generator), std::move(window)};
            window.clear();
            for (const auto& e : out.state.buffer.entries())
                if (e.params.seed & dsl::kReservedSeedBit) throw Error("a holdout seed entered the level buffer");
            out.checkpoints.push_back(std::move(c));
        }
    }
    out.networks = trainer.networks();
    return out;
}

std::string training_log_csv(const std::vector<UedRun>& runs) {
    std::ostringstream o;
    o << "run,seed,iteration,step,source,assignment,scenario_seed,regret,r_max,mean_return,env_steps,"
         "generator_updated,faulted\n";
    for (const auto& r : runs)
        for (const auto& rec : r.records)
            o << r.run << ',' << r.seed << ',' << rec.iteration << ',' << rec.step << ','
              << curriculum::source_name(rec.source) << ',' << dsl::format_assignment(rec.params.assignment) << ','
              << rec.params.seed << ',' << format_number(rec.regret) << ',' << format_number(rec.r_max) << ','
              << format_number(rec.mean_return) << ',' << rec.env_steps << ',' << (rec.generator_updated ? 1 : 0)
              << ',' << (rec.faulted ? 1 : 0) << '\n';
    return o.str();
}

void run_actions_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto ctx = load_context(cfg);
    MetricsLog log;
    for (auto space : cfg.action_spaces) {
        for (auto seed : cfg.seeds) {
            std::vector<learn::PolicyNetwork> nets;
            train_action_space(cfg, ctx, space, seed, log, &nets);
            save_networks(cfg.out_dir + "/checkpoints", file_stem(actions_run_id(space), seed), nets);
        }
    }
    const auto binned = bin_metrics(log.rows(), cfg.bin);
    write_text(cfg.out_dir + "/metrics.csv", log.to_csv());
    write_text(cfg.out_dir + "/binned.csv", binned_csv(binned));
    write_text(cfg.out_dir + "/spec.scen", dsl::format_spec(ctx.spec));
    for (const auto& [metric, ylabel] : {std::pair{"return", "mean episodic return"},
                                         std::pair{"collisions", "collisions per episode"},
                                         std::pair{"completion", "route completion"}})
        write_text(cfg.out_dir + "/curve_" + std::string(metric) + ".svg",
                   line_plot_svg(std::string(ylabel) + " (bins of " + std::to_string(cfg.bin) + " updates)",
                                 "policy update", ylabel, binned_curves(binned, metric)));
}

void run_ued_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto ctx = load_context(cfg);
    MetricsLog log;
    std::vector<UedRun> runs;
    for (auto method : cfg.methods) {
        for (auto seed : cfg.seeds) {
            auto run = run_curriculum(cfg, ctx, method, seed, log);
            const auto stem = file_stem(run.run, seed);
            save_networks(cfg.out_dir + "/checkpoints", stem, run.networks);
            for (const auto& c : run.checkpoints) {
                const auto base = cfg.out_dir + "/snapshots/" + stem + "_c" + std::to_string(c.index);
                write_text(base + "_params.csv", format_params_csv(c.generated));
                write_text(base + "_generator.txt",
                           "step " + std::to_string(c.step) + "\n" + c.generator_text);
                if (method != Method::dr) write_text(base + "_buffer.csv", c.buffer_csv);
            }
            run.networks.clear();
            runs.push_back(std::move(run));
        }
    }
    write_text(cfg.out_dir + "/metrics.csv", log.to_csv());
    write_text(cfg.out_dir + "/training_log.csv", training_log_csv(runs));
    write_text(cfg.out_dir + "/spec.scen", dsl::format_spec(ctx.spec));
    if (cfg.eval_every > 0) write_text(cfg.out_dir + "/holdout.csv", format_params_csv(make_holdout(ctx.spec)));
    for (const auto& [metric, ylabel] :
         {std::pair{"train_return", "training return"}, std::pair{"holdout_return", "holdout return"},
          std::pair{"holdout_completion", "holdout route completion"}, std::pair{"buffer_regret", "buffer mean regret"}})
        write_text(cfg.out_dir + "/curve_" + std::string(metric) + ".svg",
                   line_plot_svg(ylabel, "environment steps", ylabel, seed_curves(log.rows(), metric)));
    analyze_params_dir(cfg.out_dir);
    analyze_regret_dir(cfg.out_dir);
}

void run_experiment(const ExperimentConfig& cfg) {
    if (cfg.kind == ExperimentKind::actions) run_actions_experiment(cfg);
    else run_ued_experiment(cfg);
}

}  // namespace matsg::harness
