#include "matsg/learn/evaluate.hpp"

#include <algorithm>
#include <limits>
#include <memory>

#include "matsg/dsl/generator.hpp"
#include "matsg/learn/ppo.hpp"

namespace matsg::learn {

namespace {
constexpr std::size_t kMaxEpisodeDecisions = 1000;
}

std::uint64_t evaluation_seed(std::uint64_t scenario_seed, std::size_t episode) {
    if (episode == 0) return scenario_seed;
    const std::uint64_t top = scenario_seed & dsl::kReservedSeedBit;
    return (mix_seed(scenario_seed, episode) & ~dsl::kReservedSeedBit) | top;
}

std::vector<ReturnStats> evaluate(core::Environment& env, const std::map<core::AgentId, core::AgentPolicy*>& policies,
                                  const std::vector<dsl::ScenarioParams>& scenarios, std::size_t episodes,
                                  std::uint64_t seed) {
    std::vector<ReturnStats> out;
    out.reserve(scenarios.size());
    for (std::size_t si = 0; si < scenarios.size(); ++si) {
        ReturnStats st;
        st.max_return = -std::numeric_limits<double>::infinity();
        std::size_t agent_episodes = 0;
        for (std::size_t e = 0; e < episodes; ++e) {
            dsl::ScenarioParams p = scenarios[si];
            p.seed = evaluation_seed(p.seed, e);
            Rng rng(mix_seed(seed, mix_seed(si, e)));
            const core::Rollout r = core::rollout(env, policies, p, kMaxEpisodeDecisions, rng);
            for (const auto& [id, ret] : r.returns) {
                st.mean_return += ret;
                st.route_completion += r.completion.count(id) ? r.completion.at(id) : 0.0;
                st.max_return = std::max(st.max_return, ret);
                ++agent_episodes;
            }
            st.collision_count += r.collisions();
            ++st.episodes;
        }
        if (agent_episodes) {
            st.mean_return /= static_cast<double>(agent_episodes);
            st.route_completion /= static_cast<double>(agent_episodes);
        } else {
            st.max_return = 0.0;
        }
        if (st.episodes) st.collisions = static_cast<double>(st.collision_count) / static_cast<double>(st.episodes);
        out.push_back(st);
    }
    return out;
}

std::vector<ReturnStats> evaluate_policy(core::Environment& env,
                                         const std::map<core::AgentId, const PolicyNetwork*>& networks,
                                         const std::vector<dsl::ScenarioParams>& scenarios, std::size_t episodes,
                                         std::uint64_t seed) {
    std::vector<std::unique_ptr<NetworkPolicy>> owned;
    std::map<core::AgentId, core::AgentPolicy*> policies;
    for (const auto& [id, net] : networks) {
        owned.push_back(std::make_unique<NetworkPolicy>(*net, true));
        policies[id] = owned.back().get();
    }
    return evaluate(env, policies, scenarios, episodes, seed);
}

ReturnStats pool(const std::vector<ReturnStats>& stats) {
    ReturnStats p;
    p.max_return = stats.empty() ? 0.0 : -std::numeric_limits<double>::infinity();
    for (const auto& s : stats) {
        const double w = static_cast<double>(s.episodes);
        p.mean_return += w * s.mean_return;
        p.route_completion += w * s.route_completion;
        p.collision_count += s.collision_count;
        p.max_return = std::max(p.max_return, s.max_return);
        p.episodes += s.episodes;
    }
    if (p.episodes) {
        const double n = static_cast<double>(p.episodes);
        p.mean_return /= n;
        p.route_completion /= n;
        p.collisions = static_cast<double>(p.collision_count) / n;
    }
    return p;
}

}  // namespace matsg::learn
