#include <cmath>

#include "doctest.h"
#include "matsg/core/error.hpp"
#include "matsg/core/rollout.hpp"
#include "matsg/dsl/parser.hpp"
#include "matsg/sim/intersection_env.hpp"

using namespace matsg;
using namespace matsg::core;
using namespace matsg::sim;

namespace {

std::shared_ptr<const RoadMap> fourway() {
    static auto map = std::make_shared<const RoadMap>(make_fourway());
    return map;
}

dsl::ScenarioSpec load_scenario(const std::string& name) {
    return dsl::load_spec_or_throw(std::string(MATSG_SOURCE_DIR) + "/scenarios/" + name + ".scen");
}

dsl::ScenarioParams straight_params(std::uint64_t seed) {
    return {"straight_solo", {{"route", std::string("straight")}, {"npc_count", std::int64_t{0}}}, seed};
}

dsl::ScenarioParams busy_params(std::uint64_t seed) {
    return {"intersection",
            {{"route", std::string("left")},
             {"npc_count", std::int64_t{4}},
             {"npc_speed", 7.5},
             {"npc_keeps_distance", true},
             {"npc_respects_lights", true}},
            seed};
}

}  // namespace

TEST_CASE("reset: npc_count zero gives one controlled agent and no NPCs") {
    IntersectionEnv env(fourway(), load_scenario("intersection"), ActionSpace::macro);
    auto p = busy_params(3);
    p.assignment["npc_count"] = std::int64_t{0};
    const auto obs = env.reset(p);
    CHECK(obs.size() == 1);
    CHECK(env.world().vehicles.size() == 1);
}

TEST_CASE("reset: equal params give byte-identical worlds") {
    IntersectionEnv a(fourway(), load_scenario("intersection"), ActionSpace::macro);
    IntersectionEnv b(fourway(), load_scenario("intersection"), ActionSpace::macro);
    a.reset(busy_params(17));
    b.reset(busy_params(99));
    b.reset(busy_params(17));
    CHECK(serialize(a.world()) == serialize(b.world()));
    a.reset(busy_params(18));
    CHECK(serialize(a.world()) != serialize(b.world()));
}

TEST_CASE("reset: four NPCs occupy distinct non-overlapping spawn slots") {
    IntersectionEnv env(fourway(), load_scenario("intersection"), ActionSpace::macro);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        env.reset(busy_params(seed));
        const auto& vs = env.world().vehicles;
        REQUIRE(vs.size() == 5);
        for (std::size_t i = 0; i < vs.size(); ++i)
            for (std::size_t j = i + 1; j < vs.size(); ++j) {
                CHECK((vs[i].position - vs[j].position).norm() > kVehicleLength);
                CHECK_FALSE(rects_overlap(vs[i].footprint(), vs[j].footprint()));
            }
    }
}

TEST_CASE("reset: out of domain parameters are rejected") {
    IntersectionEnv env(fourway(), load_scenario("intersection"), ActionSpace::macro);
    auto p = busy_params(1);
    p.assignment["npc_count"] = std::int64_t{9};
    CHECK_THROWS_AS(env.reset(p), Error);
    p = busy_params(1);
    p.assignment.erase("npc_speed");
    CHECK_THROWS_AS(env.reset(p), Error);
}

TEST_CASE("step: zero continuous actions from standstill keep everything still") {
    IntersectionEnv env(fourway(), load_scenario("multi_agent"), ActionSpace::continuous);
    env.reset({"multi_agent", {{"npc_count", std::int64_t{0}}}, 2});
    const auto before = env.world().vehicles;
    JointAction joint;
    for (const auto& id : env.active_agents()) joint[id] = ContinuousAction{0.0, 0.0};
    const auto r = env.step(joint);
    CHECK(r.agents.size() == 4);
    for (const auto& [id, s] : r.agents) CHECK(s.reward == 0.0);
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(env.world().vehicles[i].position == before[i].position);
}

TEST_CASE("step: result keys equal the agents active before the step") {
    IntersectionEnv env(fourway(), load_scenario("multi_agent"), ActionSpace::continuous);
    env.reset({"multi_agent", {{"npc_count", std::int64_t{0}}}, 5});
    Rng rng(2);
    while (!env.episode_over()) {
        const auto active = env.active_agents();
        JointAction joint;
        for (const auto& id : active) joint[id] = env.decode_action(id, rng.below(env.action_count()));
        const auto r = env.step(joint);
        std::vector<AgentId> keys;
        for (const auto& [id, s] : r.agents) {
            keys.push_back(id);
            CHECK_FALSE((s.terminated && s.truncated));
            CHECK(std::isfinite(s.reward));
        }
        CHECK(keys == active);
        CHECK(env.agents().size() == 4);
    }
}

TEST_CASE("step: head-on vehicles collide at the closed-form contact tick") {
    // Both accelerate at 3 m/s^2 from rest, 40 m apart centre to centre.
    // After n ticks each has covered 0.0075 n (n + 1) / 2 m (semi-implicit
    // Euler), contact needs 2 x_n >= 40 - 4.5, first met at n = 69.
    int n = 0;
    while (2.0 * 0.0075 * n * (n + 1) / 2.0 < 40.0 - kVehicleLength) ++n;
    CHECK(n == 69);

    WorldState w;
    w.map = fourway();
    w.controlled = 2;
    VehicleState a, b;
    a.position = {-20.0, 30.0};
    a.heading = 0.0;
    b.id = 1;
    b.position = {20.0, 30.0};
    b.heading = M_PI;
    w.vehicles = {a, b};
    int contact = -1;
    for (int t = 1; t <= 100 && contact < 0; ++t) {
        advance_world(w, std::vector{ControlOutput{1.0, 0.0, 0.0}, ControlOutput{1.0, 0.0, 0.0}}, false);
        int hits = 0;
        for (const auto& e : detect_events(w)) hits += e.kind == EventKind::collision;
        if (hits) {
            CHECK(hits == 2);
            contact = t;
        }
    }
    CHECK(contact == n);
}

TEST_CASE("rollout: max_steps one gives one transition per agent") {
    IntersectionEnv env(fourway(), load_scenario("multi_agent"), ActionSpace::macro);
    UniformPolicy random(env.action_count());
    Rng rng(1);
    const auto r = rollout(env, {{AgentId{0}, &random}}, {"multi_agent", {{"npc_count", std::int64_t{0}}}, 1}, 1, rng);
    CHECK(r.transitions.size() == 4);
    for (const auto& [id, ts] : r.transitions) {
        REQUIRE(ts.size() == 1);
        CHECK(ts[0].truncated);
    }
    CHECK_FALSE(r.finished);
    CHECK_THROWS_AS(rollout(env, {{AgentId{0}, &random}}, straight_params(1), 0, rng), Error);
}

TEST_CASE("rollout: fixed seeds reproduce trajectories") {
    IntersectionEnv env(fourway(), load_scenario("intersection"), ActionSpace::waypoint);
    UniformPolicy random(env.action_count());
    auto run = [&] {
        Rng rng(77);
        return rollout(env, {{AgentId{0}, &random}}, busy_params(5), 1000, rng);
    };
    const auto a = run(), b = run();
    REQUIRE(a.transitions.at({0}).size() == b.transitions.at({0}).size());
    for (std::size_t i = 0; i < a.transitions.at({0}).size(); ++i) {
        const auto& x = a.transitions.at({0})[i];
        const auto& y = b.transitions.at({0})[i];
        CHECK(x.action == y.action);
        CHECK(x.reward == y.reward);
        CHECK(x.next_observation == y.next_observation);
    }
    CHECK(a.events == b.events);
}

TEST_CASE("rollout: discounted returns respect the per-step reward bound") {
    const double gamma = 0.99;
    Rng rng(4);
    for (auto space : {ActionSpace::continuous, ActionSpace::waypoint, ActionSpace::macro}) {
        IntersectionEnv env(fourway(), load_scenario("intersection"), space);
        UniformPolicy random(env.action_count());
        const double step_max = kMaxSpeed * ticks_per_decision(space) * kTick + 1.0;
        for (int ep = 0; ep < 5; ++ep) {
            const auto r = rollout(env, {{AgentId{0}, &random}}, busy_params(rng.next_u64() >> 1), 1000, rng);
            const auto& ts = r.transitions.at({0});
            const double bound = step_max * (1.0 - std::pow(gamma, ts.size())) / (1.0 - gamma);
            CHECK(std::abs(discounted_return(ts, gamma)) <= bound);
        }
    }
}

TEST_CASE("rollout: uniform random continuous driving makes some progress") {
    IntersectionEnv env(fourway(), load_scenario("straight_solo"), ActionSpace::continuous);
    UniformPolicy random(env.action_count());
    Rng rng(8);
    double completion = 0.0;
    for (std::uint64_t ep = 0; ep < 100; ++ep)
        completion += rollout(env, {{AgentId{0}, &random}}, straight_params(ep), 1000, rng).completion.at({0});
    MESSAGE("mean completion " << completion / 100.0);
    CHECK(completion / 100.0 > 0.0);
}
