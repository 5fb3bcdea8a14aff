#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "matsg/core/error.hpp"
#include "matsg/core/rng.hpp"
#include "matsg/dsl/parser.hpp"
#include "matsg/sim/intersection_env.hpp"
#include "matsg/sim/reward.hpp"

using namespace matsg;
using namespace matsg::sim;

namespace {

std::shared_ptr<const RoadMap> fourway() {
    static auto map = std::make_shared<const RoadMap>(make_fourway());
    return map;
}

WorldState empty_world(std::uint32_t controlled) {
    WorldState w;
    w.map = fourway();
    w.controlled = controlled;
    return w;
}

// Vehicle on a named route at arc length s, offset sideways by `lateral`.
VehicleState on_route(const WorldState& w, std::string_view route, double s, double speed, Role role,
                      double lateral = 0.0) {
    VehicleState v;
    const auto& routes = w.map->routes;
    const auto it = std::find_if(routes.begin(), routes.end(), [&](const Route& r) { return r.name == route; });
    REQUIRE(it != routes.end());
    v.route = static_cast<std::uint32_t>(it - routes.begin());
    v.path_route = v.route;
    v.heading = it->path.heading_at(s);
    v.position = it->path.point_at(s) + unit(v.heading + M_PI / 2.0) * lateral;
    v.progress = s;
    v.path_s = s;
    v.speed = speed;
    v.role = role;
    v.id = static_cast<std::uint32_t>(w.vehicles.size());
    return v;
}

std::vector<ControlOutput> npc_controls(const WorldState& w) {
    std::vector<ControlOutput> out(w.vehicles.size());
    for (std::uint32_t i = w.controlled; i < w.vehicles.size(); ++i)
        if (w.vehicles[i].active) out[i] = npc_policy(w, i);
    return out;
}

bool any_collision(const WorldState& w) {
    for (const auto& e : detect_events(w))
        if (e.kind == core::EventKind::collision) return true;
    return false;
}

dsl::ScenarioSpec load_scenario(const std::string& name) {
    return dsl::load_spec_or_throw(std::string(MATSG_SOURCE_DIR) + "/scenarios/" + name + ".scen");
}

dsl::ScenarioParams five_knob_params(const std::string& route, std::int64_t npcs, bool safe, std::uint64_t seed) {
    dsl::ScenarioParams p;
    p.spec_id = "intersection";
    p.assignment = {{"route", route},
                    {"npc_count", npcs},
                    {"npc_speed", 8.0},
                    {"npc_keeps_distance", safe},
                    {"npc_respects_lights", safe}};
    p.seed = seed;
    return p;
}

Action random_action(const IntersectionEnv& env, core::AgentId id, Rng& rng) {
    return env.decode_action(id, rng.below(env.action_count()));
}

// Brute-force point-in-rectangle oracle: true when a point inside both
// rectangles is found on a dense grid over their bounding boxes.
double overlap_area_estimate(const OrientedRect& a, const OrientedRect& b, Rng& rng, int samples) {
    const double r = std::hypot(a.half_length, a.half_width);
    int hits = 0;
    for (int i = 0; i < samples; ++i) {
        const Vec2 p{a.center.x + rng.uniform(-r, r), a.center.y + rng.uniform(-r, r)};
        if (a.contains(p) && b.contains(p)) ++hits;
    }
    return 4.0 * r * r * hits / samples;
}

Vec2 rotate_quarter(Vec2 p) { return {-p.y, p.x}; }

// The ego footprint in its own frame is the axis-aligned 4.5 m x 2 m box at the ego cell.
bool in_ego_box(int row, int col) {
    return std::abs((col - kEgoCol) * kCellSize) <= kVehicleLength / 2.0 &&
           std::abs((row - kEgoRow) * kCellSize) <= kVehicleWidth / 2.0;
}

}  // namespace

TEST_CASE("kinematics: rest with zero input is a fixed point") {
    VehicleState v;
    v.position = {1.0, 2.0};
    v.heading = 0.3;
    const auto n = advance_kinematics(v, 0.0, 0.0);
    CHECK(n.position == v.position);
    CHECK(n.heading == v.heading);
    CHECK(n.speed == 0.0);
}

TEST_CASE("kinematics: full throttle from rest for one tick") {
    VehicleState v;
    const auto n = advance_kinematics(v, 1.0, 0.0);
    CHECK(n.speed == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(n.position.x == doctest::Approx(0.0075).epsilon(1e-12));
    CHECK(n.position.y == 0.0);
}

TEST_CASE("kinematics: speed clamps to [0, v_max] and inputs clamp to [-1, 1]") {
    VehicleState v;
    v.speed = 14.99;
    CHECK(advance_kinematics(v, 5.0, 0.0).speed == kMaxSpeed);
    v.speed = 0.1;
    CHECK(advance_kinematics(v, -1.0, 0.0).speed == 0.0);
    v.speed = 5.0;
    CHECK(advance_kinematics(v, 0.0, 3.0).heading == advance_kinematics(v, 0.0, 1.0).heading);
}

TEST_CASE("kinematics: opposite steering mirrors the trajectory across the heading axis") {
    VehicleState a, b;
    a.speed = b.speed = 6.0;
    Rng rng(7);
    for (int t = 0; t < 120; ++t) {
        const double thr = rng.uniform(-1.0, 1.0), st = rng.uniform(-1.0, 1.0);
        a = advance_kinematics(a, thr, st);
        b = advance_kinematics(b, thr, -st);
        REQUIRE(a.position.x == doctest::Approx(b.position.x).epsilon(1e-12));
        REQUIRE(a.position.y == doctest::Approx(-b.position.y).scale(1.0).epsilon(1e-12));
        REQUIRE(a.heading == doctest::Approx(-b.heading).scale(1.0).epsilon(1e-12));
    }
}

TEST_CASE("waypoint controller: sign contract") {
    VehicleState v;
    v.speed = 8.0;
    auto ahead = waypoint_controller(v, {10.0, 0.0}, 8.0);
    CHECK(ahead.steer == 0.0);
    CHECK(std::abs(ahead.throttle) < 1e-12);
    CHECK(waypoint_controller(v, {0.0, 10.0}, 8.0).steer > 0.0);
    CHECK(waypoint_controller(v, {0.0, -10.0}, 8.0).steer < 0.0);
}

TEST_CASE("waypoint controller: reaches a target 10 m ahead within 80 ticks") {
    for (const Vec2 target : {Vec2{10.0, 0.0}, Vec2{9.0, 3.0}, Vec2{8.0, -5.0}}) {
        VehicleState v;
        int reached = -1;
        for (int t = 1; t <= 80 && reached < 0; ++t) {
            const auto c = waypoint_controller(v, target, kDefaultEgoSpeed);
            v = advance_kinematics(v, c.throttle, c.steer);
            v.prev_heading_error = c.heading_error;
            v.has_prev_heading_error = true;
            if ((v.position - target).norm() <= 1.0) reached = t;
        }
        CAPTURE(target.x);
        CAPTURE(target.y);
        CHECK(reached > 0);
    }
}

TEST_CASE("macro controller: STOP at rest keeps the vehicle still") {
    auto w = empty_world(1);
    w.vehicles.push_back(on_route(w, "S_straight", 4.0, 0.0, Role::controlled));
    for (int t = 0; t < 20; ++t) {
        const auto c = macro_controller(w, 0, MacroCommand::stop);
        CHECK(c.throttle == -1.0);
        advance_world(w, std::vector{c}, true);
    }
    CHECK(w.vehicles[0].speed == 0.0);
}

TEST_CASE("macro controller: lane keeping stays inside the lane for 200 ticks") {
    auto w = empty_world(1);
    w.vehicles.push_back(on_route(w, "S_straight", 4.0, 0.0, Role::controlled));
    for (int t = 0; t < 200; ++t) {
        advance_world(w, std::vector{macro_controller(w, 0, MacroCommand::follow_lane)}, true);
        const auto& v = w.vehicles[0];
        // Footprint inside the 3.5 m lane: |offset| + half width <= half lane.
        REQUIRE(v.lateral_deviation <= 3.5 / 2.0 - kVehicleWidth / 2.0);
    }
    CHECK(w.vehicles[0].progress > 60.0);
}

TEST_CASE("macro controller: turns stay well inside the route corridor") {
    // A 5 m lookahead runs slightly wide on the 5.25 m right-turn arc.
    for (auto [route, branch] : {std::pair{"E_left", Maneuver::left}, std::pair{"N_right", Maneuver::right}}) {
        auto w = empty_world(1);
        w.vehicles.push_back(on_route(w, route, 4.0, 0.0, Role::controlled));
        w.vehicles[0].branch = branch;
        double worst = 0.0;
        for (int t = 0; t < 200; ++t) {
            advance_world(w, std::vector{macro_controller(w, 0, MacroCommand::follow_lane)}, true);
            worst = std::max(worst, w.vehicles[0].lateral_deviation);
        }
        CAPTURE(route);
        CHECK(worst < 1.5);
        CHECK(w.vehicles[0].progress > 60.0);
    }
}

TEST_CASE("macro controller: brakes for a stopped leader and never hits it") {
    // IDM at 5 m/s with a 4 m gap to a stopped leader:
    // s* = 2 + 5*1.5 + 5*5/(2*sqrt(6)) = 14.60, a = 3(1 - (5/8)^4 - (14.60/4)^2) < -6, clamped to -6.
    CHECK(idm_acceleration(5.0, 8.0, 4.0, 0.0) == -kMaxBrake);
    auto w = empty_world(2);
    w.vehicles.push_back(on_route(w, "S_straight", 4.0, 5.0, Role::controlled));
    w.vehicles.push_back(on_route(w, "S_straight", 4.0 + 4.0 + kVehicleLength, 0.0, Role::controlled));
    CHECK(macro_controller(w, 0, MacroCommand::follow_lane).throttle == -1.0);

    w.vehicles[0].speed = 0.0;
    for (int t = 0; t < 200; ++t) {
        advance_world(w, std::vector{macro_controller(w, 0, MacroCommand::follow_lane), ControlOutput{-1.0, 0.0, 0.0}},
                      true);
        REQUIRE_FALSE(any_collision(w));
    }
    const double gap = w.vehicles[1].progress - w.vehicles[0].progress - kVehicleLength;
    CHECK(gap > 0.0);
    CHECK(gap < 4.0);
}

TEST_CASE("npc policy: stops before the line on red") {
    auto w = empty_world(0);
    // Offset placing the south head at the start of its red phase.
    w.light_offset = w.map->timing.green + w.map->timing.amber;
    REQUIRE(w.map->light("in_S", 0.0, w.light_offset) == LightState::red);
    auto v = on_route(w, "S_straight", 6.0, 8.0, Role::npc);
    v.cruise_speed = v.npc.target_speed = 8.0;
    w.vehicles.push_back(v);
    const double line = w.route_of(v).stop_line_s;
    for (int t = 0; t < 300; ++t) {
        REQUIRE(w.map->light("in_S", w.sim_time(), w.light_offset) == LightState::red);
        advance_world(w, npc_controls(w), false);
        REQUIRE(w.vehicles[0].progress + kVehicleLength / 2.0 <= line);
    }
    CHECK(w.vehicles[0].speed < 0.05);
}

TEST_CASE("npc policy: reckless driver runs into a stopped leader") {
    auto w = empty_world(0);
    auto reckless = on_route(w, "S_straight", 4.0, 0.0, Role::npc);
    reckless.npc = {8.0, false, false};
    reckless.cruise_speed = 8.0;
    w.vehicles.push_back(reckless);
    auto parked = on_route(w, "S_straight", 20.0, 0.0, Role::npc);
    parked.npc = {1e-9, true, true};
    w.vehicles.push_back(parked);
    bool hit = false;
    for (int t = 0; t < 200 && !hit; ++t) {
        auto c = npc_controls(w);
        c[1] = {-1.0, 0.0, 0.0};
        advance_world(w, c, false);
        hit = any_collision(w);
    }
    CHECK(hit);

    // The same scene with gap keeping ends without contact.
    w = empty_world(0);
    reckless.npc.keeps_safety_distance = true;
    w.vehicles = {reckless, parked};
    for (int t = 0; t < 200; ++t) {
        auto c = npc_controls(w);
        c[1] = {-1.0, 0.0, 0.0};
        advance_world(w, c, false);
        REQUIRE_FALSE(any_collision(w));
    }
}

TEST_CASE("npc policy: settles at its target speed on an empty route") {
    for (const char* route : {"S_straight", "E_straight", "N_straight", "W_straight"}) {
        auto w = empty_world(0);
        auto v = on_route(w, route, 4.0, 0.0, Role::npc);
        v.npc = {5.0, true, false};
        v.cruise_speed = 5.0;
        w.vehicles.push_back(v);
        int t = 0;
        for (; t < 400 && w.vehicles[0].active; ++t) {
            advance_world(w, npc_controls(w), false);
            if (t >= 100 && w.vehicles[0].active) {
                CAPTURE(route);
                CAPTURE(t);
                REQUIRE(w.vehicles[0].speed >= 4.75);
                REQUIRE(w.vehicles[0].speed <= 5.25);
            }
        }
        CHECK(t > 100);
    }
}

TEST_CASE("reward: per-tick examples and multi-tick aggregation") {
    VehicleState a, b;
    CHECK(compute_reward(a, b, 8.0) == 0.0);
    b.progress = 0.4;
    b.speed = 16.0;
    CHECK(compute_reward(a, b, 8.0) == doctest::Approx(1.4).epsilon(1e-15));
    b.progress = 0.25;
    b.speed = 4.0;
    CHECK(compute_reward(a, b, 8.0) == doctest::Approx(0.75).epsilon(1e-15));
    CHECK_THROWS_AS(compute_reward(a, b, 0.0), Error);

    // Telescoped progress plus the mean of the per-tick cruise terms.
    const std::vector<double> speeds{2.0, 4.0, 12.0};
    CHECK(aggregate_reward(1.0, 3.5, speeds, 8.0) == doctest::Approx(2.5 + (0.25 + 0.5 + 1.0) / 3.0));
    // A single tick reduces to compute_reward.
    b.progress = 1.7;
    b.speed = 6.0;
    CHECK(aggregate_reward(0.0, 1.7, std::vector{6.0}, 8.0) == compute_reward(a, b, 8.0));
}

TEST_CASE("events: oriented rectangle overlap examples") {
    const OrientedRect a{{0.0, 0.0}, 0.0, 2.25, 1.0};
    CHECK(rects_overlap(a, a));
    CHECK_FALSE(rects_overlap(a, OrientedRect{{10.0, 0.0}, 0.0, 2.25, 1.0}));
    // Rotated corner contact, checked against point sampling.
    Rng rng(11);
    for (double dx : {2.9, 3.1, 3.2, 3.3, 3.5}) {
        const OrientedRect b{{dx, 0.0}, M_PI / 4.0, 2.25, 1.0};
        const double area = overlap_area_estimate(a, b, rng, 200000);
        CAPTURE(dx);
        if (area > 1e-2) CHECK(rects_overlap(a, b));
        if (!rects_overlap(a, b)) CHECK(area == 0.0);
    }
}

TEST_CASE("events: separating axis test agrees with point sampling and is symmetric") {
    Rng rng(3);
    int disagreements = 0;
    for (int k = 0; k < 150; ++k) {
        const OrientedRect a{{0.0, 0.0}, rng.uniform(-M_PI, M_PI), rng.uniform(0.5, 3.0), rng.uniform(0.3, 1.5)};
        const OrientedRect b{{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)}, rng.uniform(-M_PI, M_PI),
                             rng.uniform(0.5, 3.0), rng.uniform(0.3, 1.5)};
        REQUIRE(rects_overlap(a, b) == rects_overlap(b, a));
        const double area = overlap_area_estimate(a, b, rng, 10000);
        const bool sampled = area > 0.0;
        if (sampled != rects_overlap(a, b) && (sampled || area >= 1e-3)) ++disagreements;
    }
    CHECK(disagreements == 0);
}

TEST_CASE("map: spawn slots never overlap and routes are lane connected") {
    const auto& m = *fourway();
    CHECK(m.routes.size() == 12);
    CHECK(m.spawn_slots.size() == 12);
    for (std::size_t i = 0; i < m.spawn_slots.size(); ++i)
        for (std::size_t j = i + 1; j < m.spawn_slots.size(); ++j) {
            const auto [pi, hi] = m.slot_pose(i);
            const auto [pj, hj] = m.slot_pose(j);
            CHECK_FALSE(rects_overlap({pi, hi, kVehicleLength / 2.0, kVehicleWidth / 2.0},
                                      {pj, hj, kVehicleLength / 2.0, kVehicleWidth / 2.0}));
        }
    for (const auto& r : m.routes) {
        for (std::size_t k = 0; k + 1 < r.lanes.size(); ++k) {
            const auto& a = m.find_lane(r.lanes[k])->centerline.points().back();
            const auto& b = m.find_lane(r.lanes[k + 1])->centerline.points().front();
            CHECK((a - b).norm() < 1e-9);
        }
        CHECK(r.stop_line_s == doctest::Approx(30.0));
    }
    CHECK(m.routes[*m.route_index("S", Maneuver::straight)].path.length() == doctest::Approx(74.0));
}

TEST_CASE("map: text format round trips and matches the shipped file") {
    const std::string text = format_map(*fourway());
    const RoadMap parsed = parse_map(text);
    CHECK(format_map(parsed) == text);
    std::ifstream in(std::string(MATSG_SOURCE_DIR) + "/data/fourway.map");
    REQUIRE(in.good());
    std::stringstream ss;
    ss << in.rdbuf();
    CHECK(ss.str() == text);
    CHECK_THROWS_AS(parse_map("map x\nlane a inbound 3.5 0,0 1,0\nroute r S straight a missing\n"), Error);
}

TEST_CASE("birdview: ego only world shows just the ego footprint") {
    auto w = empty_world(1);
    w.vehicles.push_back(on_route(w, "S_straight", 10.0, 3.0, Role::controlled));
    const auto b = rasterize_birdview(w, 0);
    for (int row = 0; row < kGridSize; ++row)
        for (int col = 0; col < kGridSize; ++col) REQUIRE(b.at(kVehicles, row, col) == in_ego_box(row, col));
    // Edges touch cell centres: 9 columns by 5 rows.
    CHECK(b.count(kVehicles) == 9 * 5);
    CHECK(b.ego[0] == 3.0);
    CHECK(b.ego[2] == doctest::Approx(64.0));
}

TEST_CASE("birdview: a vehicle 10 m ahead sits about 20 cells ahead") {
    auto w = empty_world(1);
    w.vehicles.push_back(on_route(w, "S_straight", 5.0, 0.0, Role::controlled));
    w.vehicles.push_back(on_route(w, "S_straight", 15.0, 0.0, Role::npc));
    const auto b = rasterize_birdview(w, 0);
    double row_sum = 0, col_sum = 0;
    int n = 0;
    for (int row = 0; row < kGridSize; ++row)
        for (int col = kEgoCol + 8; col < kGridSize; ++col)
            if (b.at(kVehicles, row, col)) row_sum += row, col_sum += col, ++n;
    REQUIRE(n > 0);
    CHECK(col_sum / n == doctest::Approx(kEgoCol + 20).epsilon(0.03));
    CHECK(row_sum / n == doctest::Approx(kEgoRow).epsilon(0.03));
}

TEST_CASE("birdview: every channel matches a brute-force oracle") {
    Rng rng(5);
    const auto& routes = fourway()->routes;
    for (int trial = 0; trial < 6; ++trial) {
        auto w = empty_world(1);
        const auto& r0 = routes[rng.below(routes.size())];
        w.vehicles.push_back(
            on_route(w, r0.name, rng.uniform(2.0, 60.0), 5.0, Role::controlled, rng.uniform(-1.0, 1.0)));
        w.vehicles[0].heading += rng.uniform(-0.3, 0.3);
        for (int k = 0; k < 5; ++k) {
            const auto& r = routes[rng.below(routes.size())];
            auto v = on_route(w, r.name, rng.uniform(0.0, r.path.length()), 5.0, Role::npc);
            v.active = k != 4;
            w.vehicles.push_back(v);
        }
        const auto b = rasterize_birdview(w, 0);
        const auto& ego = w.vehicles[0];
        const Polyline& path = w.route_of(ego).path;
        const double p = ego.progress;
        std::size_t mismatches = 0;
        for (int row = 0; row < kGridSize; ++row)
            for (int col = 0; col < kGridSize; ++col) {
                const Vec2 q = cell_center(ego.position, ego.heading, row, col);
                bool veh = in_ego_box(row, col);
                for (std::size_t i = 1; i < w.vehicles.size(); ++i)
                    veh |= w.vehicles[i].active && w.vehicles[i].footprint().contains(q);
                // Remaining route: some point of the path beyond p within half a lane.
                const auto pr = path.project(q, p, path.length());
                const double d = (path.point_at(std::clamp(pr.s, p, path.length())) - q).norm();
                const bool on_route = std::min(d, pr.s >= p ? pr.distance : d) <= 1.75;
                mismatches += b.at(kDrivable, row, col) != w.map->drivable(q);
                mismatches += b.at(kLaneMarkings, row, col) != w.map->lane_marking(q);
                mismatches += b.at(kVehicles, row, col) != veh;
                mismatches += b.at(kRoute, row, col) != on_route;
            }
        CHECK(mismatches == 0);
    }
}

TEST_CASE("birdview: rigid quarter turn of the world leaves the grid unchanged") {
    // The junction is symmetric under a quarter turn that maps the S approach to E.
    auto turn = [](std::string name) {
        const std::string from = "SENW", to = "ENWS";
        name[0] = to[from.find(name[0])];
        return name;
    };
    // Offsets keep rectangle edges away from cell centres.
    const std::tuple<const char*, double, double> scene[] = {
        {"S_left", 12.31, 0.137}, {"N_straight", 20.13, -0.211}, {"W_right", 31.77, 0.053}};
    auto w = empty_world(1), t = empty_world(1);
    for (auto [route, s, lat] : scene) {
        w.vehicles.push_back(on_route(w, route, s, 4.0, w.vehicles.empty() ? Role::controlled : Role::npc, lat));
        t.vehicles.push_back(on_route(t, turn(route), s, 4.0, t.vehicles.empty() ? Role::controlled : Role::npc, lat));
    }
    for (std::size_t i = 0; i < w.vehicles.size(); ++i) {
        const Vec2 rp = rotate_quarter(w.vehicles[i].position);
        CHECK((rp - t.vehicles[i].position).norm() < 1e-9);
        t.vehicles[i].position = rp;
        t.vehicles[i].heading = wrap_angle(w.vehicles[i].heading + M_PI / 2.0);
    }
    const auto a = rasterize_birdview(w, 0), b = rasterize_birdview(t, 0);
    for (int c = 0; c < kChannels; ++c) {
        int diff = 0;
        for (int row = 0; row < kGridSize; ++row)
            for (int col = 0; col < kGridSize; ++col)
                if (a.at(c, row, col) != b.at(c, row, col)) {
                    ++diff;
                    MESSAGE(row << "," << col);
                }
        CAPTURE(c);
        CHECK(diff == 0);
    }
}

TEST_CASE("environment: action persistence and one reward per decision") {
    const auto spec = load_scenario("intersection");
    for (auto space : {ActionSpace::continuous, ActionSpace::waypoint, ActionSpace::macro}) {
        IntersectionEnv env(fourway(), spec, space);
        env.reset(five_knob_params("straight", 2, true, 9));
        Rng rng(1);
        const auto r = env.step({{{0}, random_action(env, {0}, rng)}});
        CHECK(env.world().tick == static_cast<std::uint64_t>(ticks_per_decision(space)));
        CHECK(r.agents.size() == 1);
        CHECK(r.agents.at({0}).observation.input_size() == kObservationSize);
    }
    CHECK(discrete_action_count(ActionSpace::continuous) == 81);
    CHECK(discrete_action_count(ActionSpace::waypoint) == 7);
    CHECK(discrete_action_count(ActionSpace::macro) == 5);
}

TEST_CASE("environment: continuous bins are symmetric in acceleration") {
    CHECK(continuous_throttle_level(0) == -0.5);
    CHECK(continuous_throttle_level(4) == 0.0);
    CHECK(continuous_throttle_level(8) == 1.0);
    CHECK(continuous_steer_level(0) == -1.0);
    CHECK(continuous_steer_level(8) == 1.0);
}

TEST_CASE("environment: contract violations raise errors") {
    const auto spec = load_scenario("multi_agent");
    dsl::ScenarioParams params{"multi_agent", {{"npc_count", std::int64_t{0}}}, 4};
    IntersectionEnv env(fourway(), spec, ActionSpace::macro);
    CHECK_THROWS_AS(env.step({}), Error);
    env.reset(params);
    CHECK(env.agents().size() == 4);
    core::JointAction joint;
    for (std::uint32_t i = 0; i < 4; ++i) joint[{i}] = MacroAction{MacroCommand::stop};
    auto missing = joint;
    missing.erase({2});
    CHECK_THROWS_AS(env.step(missing), Error);
    auto wrong = joint;
    wrong[{1}] = ContinuousAction{0.5, 0.0};
    CHECK_THROWS_AS(env.step(wrong), Error);
    auto stranger = joint;
    stranger[{9}] = MacroAction{};
    CHECK_THROWS_AS(env.step(stranger), Error);

    IntersectionEnv cont(fourway(), spec, ActionSpace::continuous);
    cont.reset(params);
    core::JointAction big;
    for (std::uint32_t i = 0; i < 4; ++i) big[{i}] = ContinuousAction{1.5, 0.0};
    CHECK_THROWS_AS(cont.step(big), Error);

    IntersectionEnv way(fourway(), spec, ActionSpace::waypoint);
    way.reset(params);
    core::JointAction far;
    for (std::uint32_t i = 0; i < 4; ++i) far[{i}] = WaypointAction{{1000.0, 0.0}};
    CHECK_THROWS_AS(way.step(far), Error);

    auto bad = spec;
    bad.map_id = "nowhere";
    CHECK_THROWS_AS(IntersectionEnv(fourway(), bad, ActionSpace::macro), Error);
}

TEST_CASE("environment: all agents stopped ends in a deadlock after 100 ticks") {
    IntersectionEnv env(fourway(), load_scenario("multi_agent"), ActionSpace::macro);
    env.reset({"multi_agent", {{"npc_count", std::int64_t{0}}}, 4});
    core::JointAction joint;
    for (std::uint32_t i = 0; i < 4; ++i) joint[{i}] = MacroAction{MacroCommand::stop};
    std::vector<core::Event> events;
    while (!env.episode_over()) {
        auto r = env.step(joint);
        events.insert(events.end(), r.events.begin(), r.events.end());
        for (const auto& [id, s] : r.agents) CHECK_FALSE(s.terminated);
    }
    CHECK(env.world().tick == kDeadlockTicks);
    CHECK(events.size() == 4);
    for (const auto& e : events) CHECK(e.kind == core::EventKind::deadlock);
    CHECK_THROWS_AS(env.step(joint), Error);
}

TEST_CASE("environment: following the lane completes the straight route") {
    IntersectionEnv env(fourway(), load_scenario("straight_solo"), ActionSpace::macro);
    dsl::ScenarioParams params{"straight_solo", {{"route", std::string("straight")}, {"npc_count", std::int64_t{0}}}, 0};
    int completed = 0;
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        params.seed = seed;
        env.reset(params);
        std::vector<core::Event> events;
        double total = 0.0;
        while (!env.episode_over()) {
            auto r = env.step({{{0}, MacroAction{MacroCommand::follow_lane}}});
            total += r.agents.at({0}).reward;
            events.insert(events.end(), r.events.begin(), r.events.end());
        }
        // Waiting out a red light may exhaust the horizon.
        if (events.back().kind == core::EventKind::route_complete) {
            ++completed;
            CHECK(env.task_completion({0}) == 1.0);
            CHECK(total > 50.0);
        }
    }
    CHECK(completed >= 4);
}

TEST_CASE("environment: macro branch that leaves the route ends off route") {
    IntersectionEnv env(fourway(), load_scenario("straight_solo"), ActionSpace::macro);
    env.reset({"straight_solo", {{"route", std::string("straight")}, {"npc_count", std::int64_t{0}}}, 1});
    core::EventKind last = core::EventKind::timeout;
    while (!env.episode_over()) {
        auto r = env.step({{{0}, MacroAction{MacroCommand::turn_right}}});
        if (!r.events.empty()) last = r.events.back().kind;
    }
    CHECK(last == core::EventKind::off_route);
}

TEST_CASE("environment: random episodes are deterministic, keep progress monotone and bound rewards") {
    const auto spec = load_scenario("intersection");
    Rng pick(21);
    for (int ep = 0; ep < 12; ++ep) {
        const auto space = static_cast<ActionSpace>(ep % 3);
        const std::string route = std::array{"straight", "left", "right"}[pick.below(3)];
        const auto params = five_knob_params(route, static_cast<std::int64_t>(pick.below(7)), pick.bernoulli(0.5),
                                             pick.next_u64() >> 1);
        std::vector<std::vector<std::uint8_t>> traces[2];
        for (int rep = 0; rep < 2; ++rep) {
            IntersectionEnv env(fourway(), spec, space);
            env.reset(params);
            Rng rng(ep);
            double last_progress = env.world().vehicles[0].progress;
            traces[rep].push_back(serialize(env.world()));
            while (!env.episode_over()) {
                const auto r = env.step({{{0}, random_action(env, {0}, rng)}});
                traces[rep].push_back(serialize(env.world()));
                const double p = env.world().vehicles[0].progress;
                REQUIRE(p >= last_progress);
                last_progress = p;
                const double bound = kMaxSpeed * ticks_per_decision(space) * kTick + 1.0;
                REQUIRE(r.agents.at({0}).reward <= bound);
            }
            const double c = env.task_completion({0});
            CHECK(c >= 0.0);
            CHECK(c <= 1.0);
        }
        CHECK(traces[0] == traces[1]);
    }
}

TEST_CASE("environment: spawned vehicles never overlap and NPC count follows the knob") {
    const auto spec = load_scenario("intersection");
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        IntersectionEnv env(fourway(), spec, ActionSpace::macro);
        const auto n = static_cast<std::int64_t>(seed % 7);
        env.reset(five_knob_params("left", n, seed % 2 == 0, seed));
        const auto& vs = env.world().vehicles;
        REQUIRE(vs.size() == static_cast<std::size_t>(n) + 1);
        CHECK(fourway()->routes[vs[0].route].maneuver == Maneuver::left);
        CHECK_FALSE(any_collision(env.world()));
        for (std::size_t i = 1; i < vs.size(); ++i) CHECK(vs[i].npc.keeps_safety_distance == (seed % 2 == 0));
    }
}

TEST_CASE("environment: trace rows cover every active vehicle per tick") {
    IntersectionEnv env(fourway(), load_scenario("intersection"), ActionSpace::macro);
    std::ostringstream out;
    env.set_trace(&out);
    env.reset(five_knob_params("straight", 2, true, 3));
    env.step({{{0}, MacroAction{}}});
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    CHECK(line == "tick,id,x,y,heading,speed,p");
    int rows = 0;
    while (std::getline(in, line)) ++rows;
    CHECK(rows == 3 * 11);
}
