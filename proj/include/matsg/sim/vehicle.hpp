// vehicle.hpp - vehicle state, action variants and the kinematic bicycle model.
#pragma once

#include <cstdint>
#include <variant>

#include "matsg/sim/geometry.hpp"
#include "matsg/sim/road_map.hpp"

namespace matsg::sim {

inline constexpr double kTick = 0.05;          // s
inline constexpr double kMaxSpeed = 15.0;      // m/s
inline constexpr double kWheelbase = 2.7;      // m
inline constexpr double kMaxAccel = 3.0;       // m/s^2
inline constexpr double kMaxBrake = 6.0;       // m/s^2
inline constexpr double kMaxSteerAngle = 0.5;  // rad
inline constexpr double kVehicleLength = 4.5;  // m
inline constexpr double kVehicleWidth = 2.0;   // m
inline constexpr double kWaypointRange = 20.0; // m

enum class Role : std::uint8_t { controlled, npc };

enum class MacroCommand : std::uint8_t { follow_lane, stop, turn_left, turn_right, go_straight };

struct ContinuousAction {
    double throttle = 0.0;  // [-1, 1]; negative values brake
    double steer = 0.0;     // [-1, 1]; positive steers left
};

struct WaypointAction {
    Vec2 target;  // world frame, within kWaypointRange of the vehicle
};

struct MacroAction {
    MacroCommand command = MacroCommand::follow_lane;
};

using Action = std::variant<ContinuousAction, WaypointAction, MacroAction>;

struct NpcBehaviorConfig {
    double target_speed = 8.0;
    bool keeps_safety_distance = true;
    bool respects_traffic_lights = true;
};

struct VehicleState {
    std::uint32_t id = 0;
    Role role = Role::controlled;
    bool active = true;
    Vec2 position;
    double heading = 0.0;
    double speed = 0.0;
    std::uint32_t route = 0;  // index into RoadMap::routes
    double progress = 0.0;    // arc length along the route
    double lateral_deviation = 0.0;
    double cruise_speed = 8.0;  // v_target for controlled agents, target speed for NPCs
    NpcBehaviorConfig npc;

    // Controller memory.
    double prev_heading_error = 0.0;
    bool has_prev_heading_error = false;
    Maneuver branch = Maneuver::straight;  // macro branch selection at the junction
    std::uint32_t path_route = 0;          // route currently tracked by lane keeping
    bool path_committed = false;
    double path_s = 0.0;

    OrientedRect footprint() const {
        return {position, heading, kVehicleLength / 2.0, kVehicleWidth / 2.0};
    }
};

// Semi-implicit Euler on the kinematic bicycle model: speed first, then
// position and heading with the new speed. Inputs are clamped.
VehicleState advance_kinematics(const VehicleState& v, double throttle, double steer, double dt = kTick);

// Maps a desired longitudinal acceleration to a throttle command.
double accel_to_throttle(double accel);

}  // namespace matsg::sim
