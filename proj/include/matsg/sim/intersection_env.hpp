// intersection_env.hpp - the signalized junction as a multi-agent environment.
#pragma once

#include <memory>
#include <ostream>

#include "matsg/core/posg.hpp"
#include "matsg/dsl/scenario.hpp"
#include "matsg/sim/birdview.hpp"
#include "matsg/sim/controllers.hpp"
#include "matsg/sim/world.hpp"

namespace matsg::sim {

enum class ActionSpace { continuous, waypoint, macro };

std::string_view action_space_name(ActionSpace a);
std::optional<ActionSpace> action_space_from_name(std::string_view s);

// Ticks one decision persists: 2, 5 and 10.
int ticks_per_decision(ActionSpace a);
// Discrete action set sizes: 9 x 9 throttle/steer bins, 7 waypoints, 5 commands.
std::size_t discrete_action_count(ActionSpace a);
// Inverse of discrete_action_count for a trained policy head.
std::optional<ActionSpace> action_space_for_count(std::size_t n);

// Throttle and steer levels of the continuous bins. Throttle levels are
// evenly spaced in acceleration over [-kMaxAccel, kMaxAccel]; steer levels
// are evenly spaced over [-1, 1].
double continuous_throttle_level(std::size_t i);
double continuous_steer_level(std::size_t i);

inline constexpr double kDefaultEgoSpeed = 8.0;

class IntersectionEnv final : public core::Environment {
public:
    IntersectionEnv(std::shared_ptr<const RoadMap> map, dsl::ScenarioSpec spec, ActionSpace space);

    std::map<core::AgentId, core::Observation> reset(const dsl::ScenarioParams& params) override;
    core::StepResult step(const core::JointAction& joint) override;

    std::vector<core::AgentId> active_agents() const override;
    std::vector<core::AgentId> agents() const override;
    bool episode_over() const override;
    std::size_t action_count() const override { return discrete_action_count(space_); }
    Action decode_action(core::AgentId agent, std::size_t index) const override;
    double task_completion(core::AgentId agent) const override;
    std::size_t observation_size() const override { return kObservationSize; }

    const WorldState& world() const { return world_; }
    ActionSpace action_space() const { return space_; }
    const dsl::ScenarioSpec& spec() const { return spec_; }
    BirdviewObservation birdview(core::AgentId agent) const { return rasterize_birdview(world_, agent.index); }

    // Per-tick CSV rows `tick,id,x,y,heading,speed,p` for active vehicles.
    void set_trace(std::ostream* out) { trace_ = out; }

private:
    enum class Status : std::uint8_t { active, terminated, truncated };

    core::Observation observe(std::uint32_t agent) const;
    void apply_tick(const core::JointAction& joint);
    void write_trace() const;

    std::shared_ptr<const RoadMap> map_;
    dsl::ScenarioSpec spec_;
    ActionSpace space_;
    WorldState world_;
    std::vector<Status> status_;
    std::vector<double> start_progress_;
    bool ready_ = false;
    std::ostream* trace_ = nullptr;
};

}  // namespace matsg::sim
