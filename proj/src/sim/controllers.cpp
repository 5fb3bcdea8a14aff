#include "matsg/sim/controllers.hpp"

#include <algorithm>
#include <cmath>

namespace matsg::sim {

ControlOutput waypoint_controller(const VehicleState& v, Vec2 target, double cruise_speed,
                                  const WaypointGains& g) {
    const Vec2 d = target - v.position;
    const double dist = d.norm();
    ControlOutput out;
    out.heading_error = dist > 1e-9 ? wrap_angle(std::atan2(d.y, d.x) - v.heading) : 0.0;
    const double rate = v.has_prev_heading_error ? (out.heading_error - v.prev_heading_error) / kTick : 0.0;
    out.steer = std::clamp(g.kp * out.heading_error + g.kd * rate, -1.0, 1.0);
    // Targets behind the vehicle are reached by turning, not by driving on.
    const double alignment = std::max(0.0, std::cos(out.heading_error));
    const double desired = std::min(cruise_speed, g.k_arrive * dist) * alignment;
    out.throttle = accel_to_throttle(g.k_speed * (desired - v.speed));
    return out;
}

double idm_acceleration(double speed, double desired_speed, double gap, double leader_speed, const IdmParams& p) {
    if (gap <= 0.1) return -kMaxBrake;
    const double v0 = std::max(desired_speed, 0.1);
    const double dv = speed - leader_speed;
    const double s_star =
        p.min_gap + std::max(0.0, speed * p.time_headway + speed * dv / (2.0 * std::sqrt(p.max_accel * p.comfortable_brake)));
    const double a = p.max_accel * (1.0 - std::pow(speed / v0, p.exponent) - (s_star / gap) * (s_star / gap));
    return std::max(a, -kMaxBrake);
}

std::optional<Leader> find_leader(const WorldState& w, std::uint32_t self, const Polyline& path, double s) {
    std::optional<Leader> best;
    const auto& me = w.vehicles[self];
    for (std::uint32_t j = 0; j < w.vehicles.size(); ++j) {
        const auto& o = w.vehicles[j];
        if (j == self || !o.active) continue;
        if ((o.position - me.position).norm() > kLeaderHorizon + kVehicleLength) continue;
        const Projection pr = path.project(o.position, s, s + kLeaderHorizon);
        if (pr.distance > kCorridorHalfWidth || pr.s <= s) continue;
        const double gap = pr.s - s - kVehicleLength;
        if (best && gap >= best->gap) continue;
        const double along = o.speed * std::cos(o.heading - path.heading_at(pr.s));
        best = Leader{j, gap, std::max(0.0, along)};
    }
    return best;
}

std::uint32_t macro_path_route(const WorldState& w, const VehicleState& v) {
    if (v.path_committed) return v.path_route;
    const auto& approach = w.route_of(v).approach;
    auto idx = w.map->route_index(approach, v.branch);
    return idx ? static_cast<std::uint32_t>(*idx) : v.route;
}

namespace {

constexpr double kLateralAccel = 3.0;  // m/s^2 allowed on curves
constexpr double kCurveHorizon = 20.0;

// Highest speed from which every curve within the horizon can be taken at
// kLateralAccel after comfortable braking.
double curve_speed_limit(const Polyline& path, double s) {
    double limit = kMaxSpeed;
    const double b = IdmParams{}.comfortable_brake;
    for (double d = 0.0; d < kCurveHorizon; d += 1.0) {
        const double k = std::abs(wrap_angle(path.heading_at(s + d + 2.0) - path.heading_at(s + d))) / 2.0;
        if (k < 1e-6) continue;
        limit = std::min(limit, std::sqrt(kLateralAccel / k + 2.0 * b * d));
    }
    return limit;
}

ControlOutput lane_keep(const WorldState& w, const VehicleState& v, std::uint32_t path_route, double cruise,
                        bool keep_gap, std::optional<double> extra_accel) {
    const Polyline& path = w.map->routes[path_route].path;
    const Vec2 target = path.point_at(v.path_s + kLookahead);
    cruise = std::min(cruise, curve_speed_limit(path, v.path_s));
    ControlOutput out = waypoint_controller(v, target, cruise);
    // Speed is governed here rather than by the waypoint approach law.
    double accel = WaypointGains{}.k_speed * (cruise - v.speed);
    if (keep_gap) {
        const auto self = static_cast<std::uint32_t>(&v - w.vehicles.data());
        if (auto leader = find_leader(w, self, path, v.path_s))
            accel = std::min(accel, idm_acceleration(v.speed, cruise, leader->gap, leader->speed));
    }
    if (extra_accel) accel = std::min(accel, *extra_accel);
    out.throttle = accel_to_throttle(accel);
    return out;
}

}  // namespace

ControlOutput macro_controller(const WorldState& w, std::uint32_t self, MacroCommand command) {
    const auto& v = w.vehicles[self];
    ControlOutput out = lane_keep(w, v, macro_path_route(w, v), v.cruise_speed, true, std::nullopt);
    if (command == MacroCommand::stop) out.throttle = -1.0;
    return out;
}

std::optional<double> signal_stop_accel(const WorldState& w, const VehicleState& v) {
    const Route& r = w.route_of(v);
    const double front = v.progress + kVehicleLength / 2.0;
    const double to_line = r.stop_line_s - front;
    if (to_line < -0.5) return std::nullopt;  // already in the junction
    const LightState light = w.map->light(r.lanes.front(), w.sim_time(), w.light_offset);
    if (light == LightState::green) return std::nullopt;
    if (light == LightState::amber) {
        // Proceed on amber when a comfortable stop is no longer possible.
        const double stopping = v.speed * v.speed / (2.0 * IdmParams{}.comfortable_brake);
        if (stopping > to_line) return std::nullopt;
    }
    return idm_acceleration(v.speed, v.cruise_speed, to_line, 0.0, IdmParams{0.5, 1.0, 2.0, kMaxAccel, 4.0});
}

ControlOutput npc_policy(const WorldState& w, std::uint32_t self) {
    const auto& v = w.vehicles[self];
    std::optional<double> stop;
    if (v.npc.respects_traffic_lights) stop = signal_stop_accel(w, v);
    return lane_keep(w, v, v.route, v.npc.target_speed, v.npc.keeps_safety_distance, stop);
}

void advance_world(WorldState& w, std::span<const ControlOutput> controls, bool macro_agents) {
    auto& vs = w.vehicles;
    for (std::uint32_t i = 0; i < vs.size(); ++i) {
        if (!vs[i].active) continue;
        VehicleState next = advance_kinematics(vs[i], controls[i].throttle, controls[i].steer);
        next.prev_heading_error = controls[i].heading_error;
        next.has_prev_heading_error = true;
        const double travelled = (next.position - vs[i].position).norm();
        update_progress(next, w.route_of(next), travelled);
        const bool macro = next.role == Role::controlled && macro_agents;
        if (macro || next.role == Role::npc) {
            next.path_route = macro ? macro_path_route(w, next) : next.route;
            const Route& pr = w.map->routes[next.path_route];
            next.path_s = pr.path.project(next.position, next.path_s - 5.0, next.path_s + travelled + 5.0).s;
            if (macro && !next.path_committed && next.path_s > pr.stop_line_s) next.path_committed = true;
        }
        vs[i] = next;
    }
    ++w.tick;

    bool all_still = true;
    for (std::uint32_t i = 0; i < w.controlled; ++i)
        if (vs[i].active && vs[i].speed >= kDeadlockSpeed) all_still = false;
    w.still_ticks = all_still ? w.still_ticks + 1 : 0;

    for (std::uint32_t i = w.controlled; i < vs.size(); ++i)
        if (vs[i].active && vs[i].progress >= w.route_of(vs[i]).path.length() - kRouteCompleteSlack)
            vs[i].active = false;
}

}  // namespace matsg::sim
