// dcd.hpp - one iteration of the replay/generate curriculum loop and its baselines.
#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "matsg/core/rng.hpp"
#include "matsg/curriculum/cem.hpp"
#include "matsg/curriculum/level_buffer.hpp"
#include "matsg/dsl/generator.hpp"

namespace matsg::curriculum {

enum class Method { dr, plr, dcd };
enum class Source { generated, replayed };

std::string_view method_name(Method m);
Method method_from_name(std::string_view name);  // throws on an unknown name
std::string_view source_name(Source s);

struct CurriculumConfig {
    Method method = Method::dcd;
    double replay_prob = 0.5;  // P_D
    CemConfig cem;
    BufferConfig buffer;

    void validate() const;
};

// What the caller's rollout (and optional policy update) reports back.
struct RunOutcome {
    std::vector<double> values;  // V(s_t) at every visited decision state, recorded before the update
    std::vector<double> episode_returns;
    std::uint64_t env_steps = 0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
};

// Runs the scenario with a seed derived from the curriculum stream. A thrown
// matsg::Error marks the scenario faulted.
using ScenarioRunner = std::function<RunOutcome(const dsl::ScenarioParams&, std::uint64_t rollout_seed)>;

struct DcdState {
    dsl::GeneratorDistribution generator;
    LevelBuffer buffer;
    std::vector<ScoredParams> history;  // generated scenarios since the last generator update
    std::map<dsl::ScenarioParams, double> best_return;  // running max episodic return per θ
    std::uint64_t step = 0;  // environment steps consumed
    std::uint64_t iteration = 0;
    std::uint64_t generator_updates = 0;
    Rng rng;
};

// Uniform-range generator for DR and PLR, Gaussian CEM generator for DCD.
DcdState initial_state(const dsl::ScenarioSpec& spec, const CurriculumConfig& cfg, std::uint64_t seed);

struct IterationRecord {
    std::uint64_t iteration = 0;
    std::uint64_t step = 0;  // environment steps before this iteration
    Source source = Source::generated;
    dsl::ScenarioParams params;
    double regret = 0.0;
    double r_max = 0.0;
    double mean_return = 0.0;
    std::uint64_t env_steps = 0;
    double policy_loss = 0.0;
    double value_loss = 0.0;
    double entropy = 0.0;
    bool generator_updated = false;
    bool faulted = false;
    std::string fault;

    bool operator==(const IterationRecord&) const = default;
};

// Bernoulli(P_D) replay, forced to generate on an empty buffer. DR never replays.
Source replay_decision(const CurriculumConfig& cfg, const LevelBuffer& buffer, Rng& rng);

// Decision, scenario choice, run, regret, buffer update and (for generated
// DCD scenarios) a batched generator update.
IterationRecord dcd_iteration(DcdState& state, const dsl::ScenarioSpec& spec, const CurriculumConfig& cfg,
                              const ScenarioRunner& run);

}  // namespace matsg::curriculum
