// controllers.hpp - low-level trackers behind the waypoint and macro action
// abstractions, and the scripted NPC driver.
#pragma once

#include <optional>
#include <span>

#include "matsg/sim/vehicle.hpp"
#include "matsg/sim/world.hpp"

namespace matsg::sim {

struct ControlOutput {
    double throttle = 0.0;
    double steer = 0.0;
    double heading_error = 0.0;  // stored by the caller for the derivative term
};

struct WaypointGains {
    double kp = 1.5;        // heading error -> steer
    double kd = 0.3;        // heading error rate -> steer
    double k_speed = 1.0;   // speed error (m/s) -> acceleration (m/s^2)
    double k_arrive = 1.5;  // caps desired speed at k_arrive * distance to target
};

// PD heading control plus P speed control toward the cruise speed, slowed
// on approach so near targets are not overrun.
ControlOutput waypoint_controller(const VehicleState& v, Vec2 target, double cruise_speed,
                                  const WaypointGains& gains = {});

struct IdmParams {
    double min_gap = 2.0;        // s0, m
    double time_headway = 1.5;   // T, s
    double comfortable_brake = 2.0;  // b, m/s^2
    double max_accel = kMaxAccel;    // a, m/s^2
    double exponent = 4.0;
};

// Intelligent-driver-model acceleration toward a leader `gap` metres ahead
// (bumper to bumper) moving at `leader_speed`.
double idm_acceleration(double speed, double desired_speed, double gap, double leader_speed,
                        const IdmParams& p = {});

struct Leader {
    std::uint32_t vehicle = 0;
    double gap = 0.0;    // bumper-to-bumper distance along the path
    double speed = 0.0;  // leader speed projected on the path direction
};

inline constexpr double kLookahead = 5.0;
inline constexpr double kLeaderHorizon = 40.0;
inline constexpr double kCorridorHalfWidth = 2.5;

// Closest active vehicle whose centre lies in the corridor ahead of vehicle
// `self` along `path` (starting at arc length s).
std::optional<Leader> find_leader(const WorldState& w, std::uint32_t self, const Polyline& path, double s);

// Route the lane keeper tracks for a macro-controlled vehicle: before the
// junction it follows the branch selected by the last turn command; once
// past the stop line the branch is committed.
std::uint32_t macro_path_route(const WorldState& w, const VehicleState& v);

// Lane keeping on the commanded branch with IDM braking for leaders; STOP
// brakes fully while holding the lane.
ControlOutput macro_controller(const WorldState& w, std::uint32_t self, MacroCommand command);

// Scripted driver: follows its route at the configured target speed, with
// optional IDM gap keeping and signal compliance.
ControlOutput npc_policy(const WorldState& w, std::uint32_t self);

// Desired acceleration to stop at the stop line when the signal requires it,
// or nullopt when the signal does not constrain the vehicle.
std::optional<double> signal_stop_accel(const WorldState& w, const VehicleState& v);

// One simulation tick for every active vehicle under the given controls:
// kinematics, route progress, lane-keeping path bookkeeping, the tick and
// deadlock counters, and retirement of NPCs that finished their route.
// `macro_agents` selects branch tracking for controlled vehicles.
void advance_world(WorldState& w, std::span<const ControlOutput> controls, bool macro_agents);

}  // namespace matsg::sim
