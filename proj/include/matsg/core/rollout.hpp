// rollout.hpp - running per-agent policies through one episode.
#pragma once

#include <map>
#include <vector>

#include "matsg/core/posg.hpp"
#include "matsg/core/rng.hpp"

namespace matsg::core {

struct PolicyDecision {
    std::uint32_t action = 0;
    double log_prob = 0.0;
    double value = 0.0;
};

// A per-agent stochastic policy over the environment's discrete action set.
class AgentPolicy {
public:
    virtual ~AgentPolicy() = default;
    virtual PolicyDecision decide(const Observation& obs, Rng& rng) = 0;
    // State-value estimate used to bootstrap truncated trajectories.
    virtual double value(const Observation& obs) = 0;
};

// Uniform over n actions with a zero value estimate.
class UniformPolicy final : public AgentPolicy {
public:
    explicit UniformPolicy(std::size_t actions) : actions_(actions) {}
    PolicyDecision decide(const Observation& obs, Rng& rng) override;
    double value(const Observation&) override { return 0.0; }

private:
    std::size_t actions_;
};

// Always the same action, with probability one.
class FixedPolicy final : public AgentPolicy {
public:
    explicit FixedPolicy(std::uint32_t action) : action_(action) {}
    PolicyDecision decide(const Observation&, Rng&) override { return {action_, 0.0, 0.0}; }
    double value(const Observation&) override { return 0.0; }

private:
    std::uint32_t action_;
};

struct Rollout {
    std::map<AgentId, std::vector<Transition>> transitions;
    std::vector<Event> events;
    std::map<AgentId, double> returns;     // undiscounted episodic return
    std::map<AgentId, double> completion;  // task completion at the end
    bool finished = false;                 // false when cut by max_steps

    std::size_t size() const;
    std::size_t collisions() const;
};

// Resets `env` with `params` and steps until the episode ends or max_steps
// decisions have been taken. Agents missing from `policies` use the policy
// stored under AgentId{0}. The last transition of an agent cut by the step
// limit is marked truncated and bootstrapped with the policy's value.
Rollout rollout(Environment& env, const std::map<AgentId, AgentPolicy*>& policies, const dsl::ScenarioParams& params,
                std::size_t max_steps, Rng& rng);

// Discounted return of one reward sequence.
double discounted_return(const std::vector<Transition>& transitions, double gamma);

}  // namespace matsg::core
