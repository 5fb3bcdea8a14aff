// evaluate.hpp - greedy policy evaluation on fixed scenario lists.
#pragma once

#include <map>
#include <vector>

#include "matsg/core/rollout.hpp"
#include "matsg/learn/network.hpp"

namespace matsg::learn {

struct ReturnStats {
    double mean_return = 0.0;       // per agent and episode
    double route_completion = 0.0;  // mean task completion in [0, 1]
    double collisions = 0.0;        // mean controlled-agent collisions per episode
    std::size_t collision_count = 0;
    double max_return = 0.0;  // best single-agent episodic return seen
    std::size_t episodes = 0;
};

// Seed of the k-th evaluation episode of a scenario. Episode 0 keeps the
// scenario's own seed; the reserved top bit is preserved.
std::uint64_t evaluation_seed(std::uint64_t scenario_seed, std::size_t episode);

// Runs `episodes` episodes per scenario with the given per-agent policies
// and aggregates their statistics. Deterministic for deterministic policies.
std::vector<ReturnStats> evaluate(core::Environment& env, const std::map<core::AgentId, core::AgentPolicy*>& policies,
                                  const std::vector<dsl::ScenarioParams>& scenarios, std::size_t episodes,
                                  std::uint64_t seed);

// Greedy (argmax) evaluation of per-agent networks; agents without their
// own network use the one stored under AgentId{0}.
std::vector<ReturnStats> evaluate_policy(core::Environment& env,
                                         const std::map<core::AgentId, const PolicyNetwork*>& networks,
                                         const std::vector<dsl::ScenarioParams>& scenarios, std::size_t episodes,
                                         std::uint64_t seed);

// Episode-weighted mean of several scenario statistics.
ReturnStats pool(const std::vector<ReturnStats>& stats);

}  // namespace matsg::learn
