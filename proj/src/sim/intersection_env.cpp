#include "matsg/sim/intersection_env.hpp"

#include <algorithm>
#include <cmath>

#include "matsg/core/error.hpp"
#include "matsg/core/rng.hpp"
#include "matsg/sim/reward.hpp"

namespace matsg::sim {

namespace {

constexpr std::size_t kThrottleBins = 9;
constexpr std::size_t kSteerBins = 9;

struct WaypointOffset {
    double ahead;
    double lateral;
};
constexpr WaypointOffset kWaypoints[] = {
    {2.5, 0.0}, {5.0, 0.0}, {10.0, 0.0}, {15.0, 0.0}, {18.0, 0.0}, {10.0, 3.0}, {10.0, -3.0},
};

constexpr MacroCommand kMacroCommands[] = {MacroCommand::follow_lane, MacroCommand::stop, MacroCommand::turn_left,
                                           MacroCommand::turn_right, MacroCommand::go_straight};

double as_real(const dsl::ParamValue& v) {
    if (const auto* d = std::get_if<double>(&v)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    throw Error("expected a numeric parameter value");
}

}  // namespace

std::string_view action_space_name(ActionSpace a) {
    switch (a) {
        case ActionSpace::continuous: return "continuous";
        case ActionSpace::waypoint: return "waypoint";
        case ActionSpace::macro: return "macro";
    }
    return "?";
}

std::optional<ActionSpace> action_space_from_name(std::string_view s) {
    if (s == "continuous") return ActionSpace::continuous;
    if (s == "waypoint") return ActionSpace::waypoint;
    if (s == "macro") return ActionSpace::macro;
    return std::nullopt;
}

int ticks_per_decision(ActionSpace a) {
    switch (a) {
        case ActionSpace::continuous: return 2;
        case ActionSpace::waypoint: return 5;
        case ActionSpace::macro: return 10;
    }
    return 1;
}

std::size_t discrete_action_count(ActionSpace a) {
    switch (a) {
        case ActionSpace::continuous: return kThrottleBins * kSteerBins;
        case ActionSpace::waypoint: return std::size(kWaypoints);
        case ActionSpace::macro: return std::size(kMacroCommands);
    }
    return 0;
}

std::optional<ActionSpace> action_space_for_count(std::size_t n) {
    for (auto a : {ActionSpace::continuous, ActionSpace::waypoint, ActionSpace::macro})
        if (discrete_action_count(a) == n) return a;
    return std::nullopt;
}

double continuous_throttle_level(std::size_t i) {
    const double accel = -kMaxAccel + 2.0 * kMaxAccel * static_cast<double>(i) / (kThrottleBins - 1);
    return accel_to_throttle(accel);
}

double continuous_steer_level(std::size_t i) {
    return -1.0 + 2.0 * static_cast<double>(i) / (kSteerBins - 1);
}

IntersectionEnv::IntersectionEnv(std::shared_ptr<const RoadMap> map, dsl::ScenarioSpec spec, ActionSpace space)
    : map_(std::move(map)), spec_(std::move(spec)), space_(space) {
    if (!map_) throw Error("environment needs a map");
    if (spec_.map_id != map_->id) throw Error("unknown map_id '" + spec_.map_id + "' for map '" + map_->id + "'");
}

std::map<core::AgentId, core::Observation> IntersectionEnv::reset(const dsl::ScenarioParams& params) {
    dsl::validate_params(spec_, params);
    auto bound = [&](dsl::Knob k) -> const dsl::ParamValue* {
        auto it = spec_.bindings.find(k);
        return it == spec_.bindings.end() ? nullptr : params.get(it->second);
    };

    Rng rng(mix_seed(params.seed, 0x5EED));
    const auto approaches = map_->approaches();
    const auto n_agents = static_cast<std::size_t>(spec_.ego.count);
    if (n_agents > approaches.size())
        throw Error("map '" + map_->id + "' has " + std::to_string(approaches.size()) + " approaches for " +
                    std::to_string(n_agents) + " controlled agents");

    std::int64_t npc_count = 0;
    if (const auto* v = bound(dsl::Knob::npc_count)) npc_count = std::get<std::int64_t>(*v);
    double npc_speed = kDefaultEgoSpeed;
    if (const auto* v = bound(dsl::Knob::npc_target_speed)) npc_speed = as_real(*v);
    double ego_speed = kDefaultEgoSpeed;
    if (const auto* v = bound(dsl::Knob::ego_target_speed)) ego_speed = as_real(*v);
    NpcBehaviorConfig npc_cfg{npc_speed, true, true};
    if (const auto* v = bound(dsl::Knob::keeps_safety_distance)) npc_cfg.keeps_safety_distance = std::get<bool>(*v);
    if (const auto* v = bound(dsl::Knob::respects_traffic_lights)) npc_cfg.respects_traffic_lights = std::get<bool>(*v);
    if (!(npc_speed > 0.0 && npc_speed <= kMaxSpeed)) throw Error("npc target speed out of domain (0, 15]");
    if (!(ego_speed > 0.0 && ego_speed <= kMaxSpeed)) throw Error("ego target speed out of domain (0, 15]");
    std::optional<Maneuver> ego_route;
    if (const auto* v = bound(dsl::Knob::route)) ego_route = maneuver_from_name(std::get<std::string>(*v));

    // Approach assignment for controlled agents.
    std::vector<std::size_t> order(approaches.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    const Maneuver maneuvers[3] = {Maneuver::straight, Maneuver::left, Maneuver::right};
    std::vector<bool> slot_used(map_->spawn_slots.size(), false);
    world_ = WorldState{};
    world_.map = map_;
    world_.controlled = static_cast<std::uint32_t>(n_agents);

    auto place = [&](std::size_t slot, Maneuver m, Role role) {
        const std::string approach = map_->slot_approach(slot);
        const auto route = map_->route_index(approach, m);
        if (!route) throw Error("approach '" + approach + "' has no " + std::string(maneuver_name(m)) + " route");
        VehicleState v;
        v.id = static_cast<std::uint32_t>(world_.vehicles.size());
        v.role = role;
        std::tie(v.position, v.heading) = map_->slot_pose(slot);
        v.route = static_cast<std::uint32_t>(*route);
        v.progress = map_->spawn_slots[slot].offset;
        v.path_route = v.route;
        v.path_s = v.progress;
        v.cruise_speed = role == Role::controlled ? ego_speed : npc_cfg.target_speed;
        v.npc = npc_cfg;
        slot_used[slot] = true;
        world_.vehicles.push_back(v);
    };

    for (std::size_t a = 0; a < n_agents; ++a) {
        const std::string& approach = approaches[order[a]];
        std::optional<std::size_t> slot;
        for (std::size_t s = 0; s < map_->spawn_slots.size(); ++s) {
            if (map_->slot_approach(s) != approach) continue;
            if (!slot || map_->spawn_slots[s].offset > map_->spawn_slots[*slot].offset) slot = s;
        }
        if (!slot) throw Error("approach '" + approach + "' has no spawn slot");
        const Maneuver m = (a == 0 && ego_route) ? *ego_route : maneuvers[rng.below(3)];
        place(*slot, m, Role::controlled);
    }

    // NPCs spawn on approaches no controlled agent uses, so nothing queues
    // behind an agent that waits at its spawn slot.
    std::vector<bool> taken(approaches.size(), false);
    for (std::size_t a = 0; a < n_agents; ++a) taken[order[a]] = true;
    std::vector<std::size_t> free;
    for (std::size_t s = 0; s < slot_used.size(); ++s) {
        const auto k = std::find(approaches.begin(), approaches.end(), map_->slot_approach(s)) - approaches.begin();
        if (!slot_used[s] && !taken[k]) free.push_back(s);
    }
    if (npc_count < 0 || static_cast<std::size_t>(npc_count) > free.size())
        throw Error("npc_count " + std::to_string(npc_count) + " out of domain: " + std::to_string(free.size()) +
                    " free spawn slots");
    for (std::int64_t k = 0; k < npc_count; ++k) {
        const std::size_t pick = k + rng.below(free.size() - k);
        std::swap(free[k], free[pick]);
    }
    std::vector<std::size_t> npc_slots(free.begin(), free.begin() + npc_count);
    std::sort(npc_slots.begin(), npc_slots.end());
    for (std::size_t s : npc_slots) place(s, maneuvers[rng.below(3)], Role::npc);

    world_.light_offset = rng.uniform(0.0, map_->timing.cycle());
    status_.assign(n_agents, Status::active);
    start_progress_.resize(n_agents);
    for (std::size_t i = 0; i < n_agents; ++i) start_progress_[i] = world_.vehicles[i].progress;
    ready_ = true;

    if (trace_) {
        *trace_ << "tick,id,x,y,heading,speed,p\n";
        write_trace();
    }
    std::map<core::AgentId, core::Observation> obs;
    for (std::uint32_t i = 0; i < n_agents; ++i) obs[{i}] = observe(i);
    return obs;
}

std::vector<core::AgentId> IntersectionEnv::active_agents() const {
    std::vector<core::AgentId> out;
    for (std::uint32_t i = 0; i < status_.size(); ++i)
        if (status_[i] == Status::active) out.push_back({i});
    return out;
}

std::vector<core::AgentId> IntersectionEnv::agents() const {
    std::vector<core::AgentId> out;
    for (std::uint32_t i = 0; i < status_.size(); ++i) out.push_back({i});
    return out;
}

bool IntersectionEnv::episode_over() const {
    return ready_ && std::none_of(status_.begin(), status_.end(), [](Status s) { return s == Status::active; });
}

double IntersectionEnv::task_completion(core::AgentId agent) const {
    const auto& v = world_.vehicles.at(agent.index);
    const double total = world_.route_of(v).path.length() - start_progress_.at(agent.index);
    if (total <= 0.0) return 1.0;
    return std::clamp((v.progress - start_progress_[agent.index]) / (total - kRouteCompleteSlack), 0.0, 1.0);
}

Action IntersectionEnv::decode_action(core::AgentId agent, std::size_t index) const {
    if (index >= action_count()) throw Error("action index out of range");
    switch (space_) {
        case ActionSpace::continuous:
            return ContinuousAction{continuous_throttle_level(index / kSteerBins), continuous_steer_level(index % kSteerBins)};
        case ActionSpace::waypoint: {
            const auto& v = world_.vehicles.at(agent.index);
            const Polyline& path = world_.route_of(v).path;
            const auto [ahead, lateral] = kWaypoints[index];
            const double s = v.progress + ahead;
            const Vec2 normal = unit(path.heading_at(s) + M_PI / 2.0);
            Vec2 target = path.point_at(s) + normal * lateral;
            // Near the route end the target can fall behind a vehicle that
            // drifted sideways; keep it inside the reachable range.
            const Vec2 d = target - v.position;
            if (d.norm() > kWaypointRange) target = v.position + d * (kWaypointRange / d.norm());
            return WaypointAction{target};
        }
        case ActionSpace::macro: return MacroAction{kMacroCommands[index]};
    }
    throw Error("unreachable action space");
}

core::Observation IntersectionEnv::observe(std::uint32_t agent) const {
    return encode_observation(rasterize_birdview(world_, agent));
}

void IntersectionEnv::write_trace() const {
    for (const auto& v : world_.vehicles) {
        if (!v.active) continue;
        *trace_ << world_.tick << ',' << v.id << ',' << v.position.x << ',' << v.position.y << ',' << v.heading << ','
                << v.speed << ',' << v.progress << '\n';
    }
}

void IntersectionEnv::apply_tick(const core::JointAction& joint) {
    auto& vs = world_.vehicles;
    std::vector<ControlOutput> controls(vs.size());
    for (std::uint32_t i = 0; i < vs.size(); ++i) {
        if (!vs[i].active) continue;
        if (vs[i].role == Role::npc) {
            controls[i] = npc_policy(world_, i);
            continue;
        }
        const Action& a = joint.at({i});
        if (const auto* c = std::get_if<ContinuousAction>(&a)) {
            controls[i] = {c->throttle, c->steer, 0.0};
        } else if (const auto* w = std::get_if<WaypointAction>(&a)) {
            controls[i] = waypoint_controller(vs[i], w->target, vs[i].cruise_speed);
        } else {
            controls[i] = macro_controller(world_, i, std::get<MacroAction>(a).command);
        }
    }
    advance_world(world_, controls, space_ == ActionSpace::macro);
}

core::StepResult IntersectionEnv::step(const core::JointAction& joint) {
    if (!ready_) throw Error("step called before reset");
    if (episode_over()) throw Error("step after episode end");
    const auto active = active_agents();
    for (const auto& [id, action] : joint) {
        if (id.index >= status_.size()) throw Error("action for unknown agent " + std::to_string(id.index));
        if (status_[id.index] != Status::active)
            throw Error("action for terminated agent " + std::to_string(id.index));
        const bool match = (space_ == ActionSpace::continuous && std::holds_alternative<ContinuousAction>(action)) ||
                           (space_ == ActionSpace::waypoint && std::holds_alternative<WaypointAction>(action)) ||
                           (space_ == ActionSpace::macro && std::holds_alternative<MacroAction>(action));
        if (!match) throw Error("action variant does not match the environment's action space");
        if (const auto* c = std::get_if<ContinuousAction>(&action)) {
            if (!(std::abs(c->throttle) <= 1.0 && std::abs(c->steer) <= 1.0))
                throw Error("continuous action outside [-1, 1]");
        } else if (const auto* w = std::get_if<WaypointAction>(&action)) {
            if (!((w->target - world_.vehicles[id.index].position).norm() <= kWaypointRange + 1e-9))
                throw Error("waypoint target beyond 20 m");
        }
    }
    for (const auto& id : active)
        if (!joint.count(id)) throw Error("missing action for agent " + std::to_string(id.index));

    for (const auto& [id, action] : joint) {
        if (const auto* m = std::get_if<MacroAction>(&action)) {
            auto& v = world_.vehicles[id.index];
            switch (m->command) {
                case MacroCommand::follow_lane:
                case MacroCommand::go_straight: v.branch = Maneuver::straight; break;
                case MacroCommand::turn_left: v.branch = Maneuver::left; break;
                case MacroCommand::turn_right: v.branch = Maneuver::right; break;
                case MacroCommand::stop: break;
            }
        }
    }

    std::map<core::AgentId, double> p_start;
    std::map<core::AgentId, std::vector<double>> speeds;
    for (const auto& id : active) p_start[id] = world_.vehicles[id.index].progress;

    core::StepResult result;
    const int ticks = ticks_per_decision(space_);
    for (int k = 0; k < ticks && !episode_over(); ++k) {
        std::vector<core::AgentId> live = active_agents();
        apply_tick(joint);
        for (const auto& id : live) speeds[id].push_back(world_.vehicles[id.index].speed);

        for (const auto& e : detect_events(world_)) {
            auto& v = world_.vehicles[e.agent.index];
            v.active = false;
            result.events.push_back(e);
            if (e.agent.index >= world_.controlled) continue;
            const bool cut = e.kind == core::EventKind::timeout || e.kind == core::EventKind::deadlock;
            status_[e.agent.index] = cut ? Status::truncated : Status::terminated;
        }
        if (trace_) write_trace();
    }

    for (const auto& id : active) {
        core::AgentStep s;
        const auto& v = world_.vehicles[id.index];
        s.reward = aggregate_reward(p_start[id], v.progress, speeds[id], v.cruise_speed);
        s.terminated = status_[id.index] == Status::terminated;
        s.truncated = status_[id.index] == Status::truncated;
        s.observation = observe(id.index);
        result.agents.emplace(id, std::move(s));
    }
    return result;
}

}  // namespace matsg::sim
