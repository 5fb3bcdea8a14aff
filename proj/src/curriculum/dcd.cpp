#include "matsg/curriculum/dcd.hpp"

#include <algorithm>
#include <cmath>

#include "matsg/core/error.hpp"
#include "matsg/curriculum/regret.hpp"

namespace matsg::curriculum {

std::string_view method_name(Method m) {
    switch (m) {
        case Method::dr: return "DR";
        case Method::plr: return "PLR";
        case Method::dcd: return "DCD";
    }
    return "?";
}

Method method_from_name(std::string_view name) {
    std::string up(name);
    std::transform(up.begin(), up.end(), up.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
    if (up == "DR") return Method::dr;
    if (up == "PLR") return Method::plr;
    if (up == "DCD") return Method::dcd;
    throw Error("unknown curriculum method '" + std::string(name) + "' (expected DR, PLR or DCD)");
}

std::string_view source_name(Source s) { return s == Source::generated ? "generated" : "replayed"; }

void CurriculumConfig::validate() const {
    if (!(replay_prob >= 0.0 && replay_prob <= 1.0)) throw Error("replay probability must lie in [0, 1]");
    cem.validate();
    LevelBuffer check(buffer);
    (void)check;
}

DcdState initial_state(const dsl::ScenarioSpec& spec, const CurriculumConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    DcdState s{dsl::uniform_distribution(spec), LevelBuffer(cfg.buffer), {}, {}, 0, 0, 0, Rng(seed)};
    s.generator.uniform_ranges = cfg.method != Method::dcd;
    return s;
}

Source replay_decision(const CurriculumConfig& cfg, const LevelBuffer& buffer, Rng& rng) {
    if (cfg.method == Method::dr) return Source::generated;
    const bool replay = rng.bernoulli(cfg.replay_prob);
    return replay && !buffer.empty() ? Source::replayed : Source::generated;
}

IterationRecord dcd_iteration(DcdState& state, const dsl::ScenarioSpec& spec, const CurriculumConfig& cfg,
                              const ScenarioRunner& run) {
    IterationRecord rec;
    rec.iteration = state.iteration++;
    rec.step = state.step;
    rec.source = replay_decision(cfg, state.buffer, state.rng);
    std::size_t replay_index = 0;
    if (rec.source == Source::replayed) {
        replay_index = state.buffer.sample(state.step, state.rng);
        rec.params = state.buffer.entries()[replay_index].params;
    } else {
        rec.params = dsl::sample_params(spec, state.generator, state.rng);
    }
    const std::uint64_t rollout_seed = state.rng.next_u64();

    RunOutcome out;
    try {
        out = run(rec.params, rollout_seed);
        if (out.values.empty() || out.episode_returns.empty()) throw Error("rollout produced no decisions");
    } catch (const Error& e) {
        rec.faulted = true;
        rec.fault = e.what();
        return rec;
    }
    rec.env_steps = out.env_steps;
    rec.policy_loss = out.policy_loss;
    rec.value_loss = out.value_loss;
    rec.entropy = out.entropy;
    state.step += out.env_steps;

    double best = out.episode_returns.front(), total = 0.0;
    for (double r : out.episode_returns) {
        best = std::max(best, r);
        total += r;
    }
    rec.mean_return = total / static_cast<double>(out.episode_returns.size());
    auto [it, fresh] = state.best_return.try_emplace(rec.params, best);
    if (!fresh) it->second = std::max(it->second, best);
    const auto est = mm_regret(out.values, it->second);
    rec.regret = est.value;
    rec.r_max = est.r_max_used;

    if (cfg.method == Method::dr) return rec;
    if (rec.source == Source::replayed) {
        state.buffer.rescore(replay_index, rec.regret, it->second);
        return rec;
    }
    state.buffer.insert(rec.params, rec.regret, rec.step, it->second);
    if (cfg.method == Method::dcd) {
        state.history.emplace_back(rec.params, rec.regret);
        if (state.history.size() >= cfg.cem.population) {
            state.generator = update_generator(spec, state.generator, state.history, cfg.cem);
            state.history.clear();
            ++state.generator_updates;
            rec.generator_updated = true;
        }
    }
    return rec;
}

}  // namespace matsg::curriculum
