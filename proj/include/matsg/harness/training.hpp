// training.hpp - independent PPO over one environment: batch collection and per-agent updates.
#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "matsg/learn/evaluate.hpp"
#include "matsg/learn/ppo.hpp"
#include "matsg/sim/intersection_env.hpp"

namespace matsg::harness {

struct BatchStats {
    std::size_t episodes = 0;
    std::size_t transitions = 0;
    double mean_return = 0.0;  // per agent and episode
    double completion = 0.0;   // per agent and episode
    double collisions = 0.0;   // controlled-agent collisions per episode
    std::vector<double> values;           // V(s_t) recorded at collection time
    std::vector<double> episode_returns;  // one per agent and episode
    learn::LossStats loss;                // mean over agents that updated
    bool updated = false;
};

class Trainer {
public:
    // One network and optimizer per controlled agent.
    Trainer(sim::IntersectionEnv& env, std::size_t agents, std::size_t hidden, learn::PpoConfig ppo,
            std::uint64_t seed);

    // Collects whole episodes until the batch holds at least ppo.batch
    // transitions over all agents, then runs one PPO update per agent unless
    // `frozen`. `scenario(k)` supplies the parameters of the k-th episode.
    BatchStats train_step(const std::function<dsl::ScenarioParams(std::size_t)>& scenario, Rng& rng,
                          bool frozen = false);

    const std::vector<learn::PolicyNetwork>& networks() const { return nets_; }
    std::map<core::AgentId, const learn::PolicyNetwork*> network_map() const;
    std::size_t updates() const { return updates_; }

private:
    sim::IntersectionEnv* env_;
    learn::PpoConfig ppo_;
    std::vector<learn::PolicyNetwork> nets_;
    std::vector<learn::Adam> adams_;
    std::size_t updates_ = 0;
};

// Rollout length cap in decisions; the environment's own horizon ends episodes first.
std::size_t max_decisions(sim::ActionSpace space);

learn::NetworkShape network_shape(const sim::IntersectionEnv& env, std::size_t hidden);

}  // namespace matsg::harness
