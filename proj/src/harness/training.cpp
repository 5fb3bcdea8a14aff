#include "matsg/harness/training.hpp"

#include "matsg/core/error.hpp"

namespace matsg::harness {

std::size_t max_decisions(sim::ActionSpace space) {
    return static_cast<std::size_t>(sim::kHorizonTicks) / static_cast<std::size_t>(sim::ticks_per_decision(space)) + 1;
}

learn::NetworkShape network_shape(const sim::IntersectionEnv& env, std::size_t hidden) {
    const std::size_t binary = sim::kChannels * sim::kGridSize * sim::kGridSize;
    return {binary, env.observation_size() - binary, hidden, env.action_count()};
}

Trainer::Trainer(sim::IntersectionEnv& env, std::size_t agents, std::size_t hidden, learn::PpoConfig ppo,
                 std::uint64_t seed)
    : env_(&env), ppo_(ppo) {
    ppo_.validate();
    if (agents == 0) throw Error("trainer needs at least one agent");
    for (std::size_t a = 0; a < agents; ++a) {
        nets_.emplace_back(network_shape(env, hidden), mix_seed(seed, a));
        adams_.emplace_back(nets_.back().params().size());
    }
}

std::map<core::AgentId, const learn::PolicyNetwork*> Trainer::network_map() const {
    std::map<core::AgentId, const learn::PolicyNetwork*> m;
    for (std::size_t a = 0; a < nets_.size(); ++a) m[core::AgentId{static_cast<std::uint32_t>(a)}] = &nets_[a];
    return m;
}

BatchStats Trainer::train_step(const std::function<dsl::ScenarioParams(std::size_t)>& scenario, Rng& rng,
                               bool frozen) {
    std::vector<learn::NetworkPolicy> policies;
    policies.reserve(nets_.size());
    std::map<core::AgentId, core::AgentPolicy*> by_agent;
    for (std::size_t a = 0; a < nets_.size(); ++a) {
        policies.emplace_back(nets_[a]);
        by_agent[core::AgentId{static_cast<std::uint32_t>(a)}] = &policies.back();
    }

    BatchStats st;
    std::vector<std::vector<core::Transition>> traj(nets_.size());
    double completion = 0.0;
    std::size_t agent_episodes = 0, collisions = 0;
    const std::size_t cap = max_decisions(env_->action_space());
    while (st.transitions < ppo_.batch) {
        const auto params = scenario(st.episodes);
        auto r = core::rollout(*env_, by_agent, params, cap, rng);
        if (r.size() == 0) throw Error("episode produced no decisions");
        ++st.episodes;
        collisions += r.collisions();
        for (auto& [id, ts] : r.transitions) {
            if (id.index >= nets_.size())
                throw Error("scenario spawns more controlled agents than the trainer has networks");
            st.episode_returns.push_back(r.returns.at(id));
            completion += r.completion.count(id) ? r.completion.at(id) : 0.0;
            ++agent_episodes;
            for (auto& t : ts) {
                st.values.push_back(t.value_estimate);
                traj[id.index].push_back(std::move(t));
            }
        }
        st.transitions += r.size();
    }
    double ret = 0.0;
    for (double x : st.episode_returns) ret += x;
    st.mean_return = ret / static_cast<double>(agent_episodes);
    st.completion = completion / static_cast<double>(agent_episodes);
    st.collisions = static_cast<double>(collisions) / static_cast<double>(st.episodes);
    if (frozen) return st;

    std::size_t updated = 0;
    for (std::size_t a = 0; a < nets_.size(); ++a) {
        if (traj[a].empty()) continue;
        auto samples = learn::make_samples(traj[a], ppo_.gamma, ppo_.gae_lambda);
        const auto rep = learn::ppo_update(nets_[a], adams_[a], samples, ppo_, rng);
        if (rep.aborted) continue;
        ++updated;
        st.loss.total += rep.stats.total;
        st.loss.policy_loss += rep.stats.policy_loss;
        st.loss.value_loss += rep.stats.value_loss;
        st.loss.entropy += rep.stats.entropy;
        st.loss.clip_fraction += rep.stats.clip_fraction;
        st.loss.approx_kl += rep.stats.approx_kl;
    }
    if (updated > 0) {
        const double n = static_cast<double>(updated);
        st.loss.total /= n;
        st.loss.policy_loss /= n;
        st.loss.value_loss /= n;
        st.loss.entropy /= n;
        st.loss.clip_fraction /= n;
        st.loss.approx_kl /= n;
        st.updated = true;
    }
    ++updates_;
    return st;
}

}  // namespace matsg::harness
