// posg.hpp - the environment-facing contract of a partially observable
// stochastic game whose dynamics and agent set are fixed by scenario
// parameters at reset.
#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "matsg/dsl/scenario.hpp"
#include "matsg/sim/vehicle.hpp"

namespace matsg::core {

struct AgentId {
    std::uint32_t index = 0;
    auto operator<=>(const AgentId&) const = default;
};

// Sparse binary features plus a dense tail; the policy input layout is
// [binary features of size binary_size | dense].
struct Observation {
    std::vector<std::uint32_t> active;  // sorted indices of ones
    std::vector<double> dense;
    std::uint32_t binary_size = 0;

    std::size_t input_size() const { return binary_size + dense.size(); }
    bool operator==(const Observation&) const = default;
};

enum class EventKind : std::uint8_t { collision, route_complete, off_route, timeout, deadlock };
std::string_view event_name(EventKind k);

struct Event {
    EventKind kind = EventKind::collision;
    AgentId agent;
    double sim_time = 0.0;
    bool operator==(const Event&) const = default;
};

using JointAction = std::map<AgentId, sim::Action>;

struct AgentStep {
    Observation observation;
    double reward = 0.0;
    bool terminated = false;
    bool truncated = false;
};

struct StepResult {
    std::map<AgentId, AgentStep> agents;  // keys: agents active before the step
    std::vector<Event> events;
};

struct Transition {
    Observation observation;
    std::uint32_t action = 0;  // index into the environment's discrete action set
    double reward = 0.0;
    Observation next_observation;
    bool done = false;       // terminated: no bootstrap
    bool truncated = false;  // cut by time limit, deadlock or rollout end: bootstrap
    double value_estimate = 0.0;
    double log_prob = 0.0;
    double bootstrap_value = 0.0;  // V(next_observation) when truncated
};

class Environment {
public:
    virtual ~Environment() = default;

    // Environment is fully determined by (params.assignment, params.seed).
    virtual std::map<AgentId, Observation> reset(const dsl::ScenarioParams& params) = 0;
    virtual StepResult step(const JointAction& joint) = 0;

    virtual std::vector<AgentId> active_agents() const = 0;
    virtual std::vector<AgentId> agents() const = 0;  // all controlled agents of the episode
    virtual bool episode_over() const = 0;

    // Discrete action set shared by all agents.
    virtual std::size_t action_count() const = 0;
    virtual sim::Action decode_action(AgentId agent, std::size_t index) const = 0;

    // Fraction of the agent's task completed so far, in [0, 1].
    virtual double task_completion(AgentId agent) const = 0;

    virtual std::size_t observation_size() const = 0;
};

}  // namespace matsg::core
