// matsg - command-line front end: experiments, analyses, evaluation and scenario checks.
#include <CLI11.hpp>

#include <filesystem>
#include <iostream>

#include "matsg/core/error.hpp"
#include "matsg/dsl/parser.hpp"
#include "matsg/harness/analysis.hpp"
#include "matsg/harness/experiments.hpp"
#include "matsg/learn/evaluate.hpp"

using namespace matsg;

namespace {

int cmd_eval(const std::string& checkpoint, const std::string& holdout, std::string scenario, std::size_t episodes,
             std::uint64_t seed) {
    if (scenario.empty()) {
        const auto beside = std::filesystem::path(holdout).parent_path() / "spec.scen";
        if (!std::filesystem::exists(beside)) throw Error("--scenario is required (no spec.scen next to the holdout file)");
        scenario = beside.string();
    }
    const auto spec = dsl::load_spec_or_throw(scenario);
    const auto net = learn::load_checkpoint(checkpoint);
    const auto space = sim::action_space_for_count(net.shape().actions);
    if (!space) throw Error("checkpoint has " + std::to_string(net.shape().actions) + " actions, no action space matches");
    const auto scenarios = harness::parse_params_csv(harness::read_text(holdout), spec.id);
    for (const auto& p : scenarios) dsl::validate_params(spec, p);
    sim::IntersectionEnv env(sim::resolve_map(spec.map_id, std::filesystem::path(scenario).parent_path().string()),
                             spec, *space);
    const auto stats = learn::evaluate_policy(env, {{core::AgentId{0}, &net}}, scenarios, episodes, seed);
    std::cout << "assignment,seed,episodes,mean_return,route_completion,collisions\n";
    for (std::size_t i = 0; i < stats.size(); ++i)
        std::cout << dsl::format_assignment(scenarios[i].assignment) << ',' << scenarios[i].seed << ','
                  << stats[i].episodes << ',' << harness::format_number(stats[i].mean_return) << ','
                  << harness::format_number(stats[i].route_completion) << ','
                  << harness::format_number(stats[i].collisions) << '\n';
    const auto all = learn::pool(stats);
    std::cout << "all,," << all.episodes << ',' << harness::format_number(all.mean_return) << ','
              << harness::format_number(all.route_completion) << ',' << harness::format_number(all.collisions) << '\n';
    return 0;
}

int cmd_check(const std::vector<std::string>& files, bool print) {
    int failures = 0;
    for (const auto& f : files) {
        const auto r = dsl::parse_spec_file(f);
        for (const auto& d : r.diagnostics) std::cerr << d.to_string(f) << '\n';
        if (!r.ok()) {
            ++failures;
            continue;
        }
        if (print) std::cout << dsl::format_spec(*r.spec);
    }
    return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Scenario-based multi-agent driving curriculum engine"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run an experiment from a config file");
    std::string config, seeds, out;
    std::uint64_t env_steps = 0;
    std::size_t updates = 0;
    run->add_option("--config", config, "Experiment config")->required()->check(CLI::ExistingFile);
    run->add_option("--seeds", seeds, "Comma-separated seeds, overriding the config");
    run->add_option("--out", out, "Output directory, overriding the config");
    run->add_option("--env-steps", env_steps, "Environment-step budget for curriculum runs");
    run->add_option("--updates", updates, "Policy-update budget for action-space runs");

    auto* analyze = app.add_subcommand("analyze", "Summarize snapshots of a finished run");
    std::string what, in_dir;
    analyze->add_option("what", what, "params or regret")->required()->check(CLI::IsMember({"params", "regret"}));
    analyze->add_option("--in", in_dir, "Run output directory")->required()->check(CLI::ExistingDirectory);

    auto* eval = app.add_subcommand("eval", "Greedy evaluation of a saved policy on a scenario list");
    std::string checkpoint, holdout, scenario;
    std::size_t episodes = 3;
    std::uint64_t eval_seed = 0;
    eval->add_option("--checkpoint", checkpoint, "Network checkpoint (.mgpp)")->required()->check(CLI::ExistingFile);
    eval->add_option("--holdout", holdout, "Scenario list CSV (assignment,seed)")->required()->check(CLI::ExistingFile);
    eval->add_option("--scenario", scenario, "Scenario spec; defaults to spec.scen beside the list");
    eval->add_option("--episodes", episodes, "Episodes per scenario");
    eval->add_option("--seed", eval_seed, "Evaluation seed");

    auto* check = app.add_subcommand("check", "Parse scenario files and report diagnostics");
    std::vector<std::string> files;
    bool print = false;
    check->add_option("files", files, "Scenario files")->required();
    check->add_flag("--print", print, "Print the canonical form");

    CLI11_PARSE(app, argc, argv);
    try {
        if (*run) {
            auto cfg = harness::load_config(config);
            if (!seeds.empty()) cfg.seeds = harness::parse_seed_list(seeds);
            if (!out.empty()) cfg.out_dir = out;
            if (run->count("--env-steps")) cfg.env_steps = env_steps;
            if (run->count("--updates")) cfg.updates = updates;
            harness::run_experiment(cfg);
            std::cout << "wrote " << cfg.out_dir << '\n';
        } else if (*analyze) {
            if (what == "params") harness::analyze_params_dir(in_dir);
            else harness::analyze_regret_dir(in_dir);
            std::cout << "wrote " << in_dir << '/' << (what == "params" ? "params_report.csv" : "regret_entropy.csv")
                      << '\n';
        } else if (*eval) {
            return cmd_eval(checkpoint, holdout, scenario, episodes, eval_seed);
        } else if (*check) {
            return cmd_check(files, print);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
