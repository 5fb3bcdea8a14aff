// experiments.hpp - the action-space comparison and the curriculum comparison.
#pragma once

#include <memory>
#include <string>
#include <vector>

#include "matsg/curriculum/dcd.hpp"
#include "matsg/harness/config.hpp"
#include "matsg/harness/metrics.hpp"
#include "matsg/harness/training.hpp"
#include "matsg/sim/road_map.hpp"

namespace matsg::harness {

struct Context {
    std::shared_ptr<const sim::RoadMap> map;
    dsl::ScenarioSpec spec;
};

// Loads the scenario and its map (the config's map file, else the spec's map id).
Context load_context(const ExperimentConfig& cfg);

// {straight, left, right} x npc_count {0, 2, 4, 6} with safe NPCs; other
// parameters take their first value, range midpoint or false. Seeds carry
// the reserved bit. Requires route and npc_count knobs to be bound.
std::vector<dsl::ScenarioParams> make_holdout(const dsl::ScenarioSpec& spec);

// CSV `assignment,seed`, one scenario per line.
std::string format_params_csv(const std::vector<dsl::ScenarioParams>& params);
std::vector<dsl::ScenarioParams> parse_params_csv(std::string_view text, const std::string& spec_id);

struct UpdateMetrics {
    double mean_return = 0.0;
    double collisions = 0.0;
    double completion = 0.0;
};

// Trains one independent network per controlled agent for cfg.updates
// updates on scenarios drawn uniformly from the spec. Appends per-update
// rows to `log` under run `actions/<space>`.
std::vector<UpdateMetrics> train_action_space(const ExperimentConfig& cfg, const Context& ctx, sim::ActionSpace space,
                                              std::uint64_t seed, MetricsLog& log,
                                              std::vector<learn::PolicyNetwork>* final_networks = nullptr);

struct Checkpoint {
    std::size_t index = 0;  // 1-based
    std::uint64_t step = 0;
    std::string buffer_csv;  // empty for DR
    std::string generator_text;
    std::vector<dsl::ScenarioParams> generated;  // scenarios generated since the previous checkpoint
};

struct UedRun {
    std::string run;
    std::uint64_t seed = 0;
    curriculum::DcdState state;
    std::vector<curriculum::IterationRecord> records;
    std::vector<Checkpoint> checkpoints;
    std::size_t generated = 0;
    std::vector<learn::PolicyNetwork> networks;
};

// Runs the curriculum loop until cfg.env_steps environment steps (agent
// decisions) are consumed or, when max_generated > 0, that many scenarios
// have been generated. Checkpoints are spread evenly over whichever budget
// applies. Appends rows to `log` under run `ued/<method>`.
UedRun run_curriculum(const ExperimentConfig& cfg, const Context& ctx, curriculum::Method method, std::uint64_t seed,
                      MetricsLog& log, std::size_t max_generated = 0);

std::string training_log_csv(const std::vector<UedRun>& runs);

// Full experiments: run every (space or method, seed) pair, then write
// metrics, plots, snapshots and network checkpoints under cfg.out_dir.
void run_actions_experiment(const ExperimentConfig& cfg);
void run_ued_experiment(const ExperimentConfig& cfg);
void run_experiment(const ExperimentConfig& cfg);

void write_text(const std::string& path, std::string_view text);
std::string read_text(const std::string& path);

}  // namespace matsg::harness
