#include "matsg/core/rollout.hpp"

#include <cmath>

#include "matsg/core/error.hpp"

namespace matsg::core {

PolicyDecision UniformPolicy::decide(const Observation&, Rng& rng) {
    return {static_cast<std::uint32_t>(rng.below(actions_)), -std::log(static_cast<double>(actions_)), 0.0};
}

std::size_t Rollout::size() const {
    std::size_t n = 0;
    for (const auto& [id, ts] : transitions) n += ts.size();
    return n;
}

std::size_t Rollout::collisions() const {
    std::size_t n = 0;
    for (const auto& e : events)
        if (e.kind == EventKind::collision && transitions.count(e.agent)) ++n;
    return n;
}

Rollout rollout(Environment& env, const std::map<AgentId, AgentPolicy*>& policies, const dsl::ScenarioParams& params,
                std::size_t max_steps, Rng& rng) {
    if (max_steps == 0) throw Error("rollout needs max_steps > 0");
    if (policies.empty()) throw Error("rollout needs at least one policy");
    auto policy_for = [&](AgentId id) -> AgentPolicy& {
        auto it = policies.find(id);
        if (it == policies.end()) it = policies.find(AgentId{0});
        if (it == policies.end() || !it->second) throw Error("no policy for agent " + std::to_string(id.index));
        return *it->second;
    };

    Rollout out;
    std::map<AgentId, Observation> obs = env.reset(params);
    for (const auto& id : env.agents()) {
        out.transitions[id];
        out.returns[id] = 0.0;
    }
    std::size_t steps = 0;
    while (!env.episode_over() && steps < max_steps) {
        JointAction joint;
        std::map<AgentId, PolicyDecision> decisions;
        for (const auto& id : env.active_agents()) {
            const auto d = policy_for(id).decide(obs.at(id), rng);
            decisions[id] = d;
            joint[id] = env.decode_action(id, d.action);
        }
        StepResult r = env.step(joint);
        out.events.insert(out.events.end(), r.events.begin(), r.events.end());
        for (auto& [id, s] : r.agents) {
            Transition t;
            t.observation = std::move(obs.at(id));
            t.action = decisions[id].action;
            t.reward = s.reward;
            t.next_observation = s.observation;
            t.done = s.terminated;
            t.truncated = s.truncated;
            t.value_estimate = decisions[id].value;
            t.log_prob = decisions[id].log_prob;
            out.returns[id] += s.reward;
            obs[id] = std::move(s.observation);
            out.transitions[id].push_back(std::move(t));
        }
        ++steps;
    }
    out.finished = env.episode_over();
    for (auto& [id, ts] : out.transitions) {
        if (ts.empty()) continue;
        Transition& last = ts.back();
        if (!last.done && !last.truncated) last.truncated = true;  // cut by max_steps
        if (last.truncated) last.bootstrap_value = policy_for(id).value(last.next_observation);
        out.completion[id] = env.task_completion(id);
    }
    return out;
}

double discounted_return(const std::vector<Transition>& transitions, double gamma) {
    double g = 0.0;
    for (std::size_t i = transitions.size(); i-- > 0;) g = transitions[i].reward + gamma * g;
    return g;
}

}  // namespace matsg::core
