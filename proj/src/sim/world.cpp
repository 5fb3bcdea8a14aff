#include "matsg/sim/world.hpp"

#include <bit>
#include <cstring>

#include "matsg/sim/geometry.hpp"

namespace matsg::sim {

namespace {

class ByteWriter {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    std::vector<std::uint8_t> take() { return std::move(out_); }

private:
    std::vector<std::uint8_t> out_;
};

}  // namespace

bool WorldState::any_controlled_active() const {
    for (std::uint32_t i = 0; i < controlled; ++i)
        if (vehicles[i].active) return true;
    return false;
}

std::vector<std::uint8_t> serialize(const WorldState& w) {
    ByteWriter b;
    b.u32(0x4D475753);  // "MGWS"
    b.u64(w.tick);
    b.f64(w.light_offset);
    b.u32(w.still_ticks);
    b.u32(w.controlled);
    b.u32(static_cast<std::uint32_t>(w.vehicles.size()));
    for (const auto& v : w.vehicles) {
        b.u32(v.id);
        b.u8(static_cast<std::uint8_t>(v.role));
        b.u8(v.active);
        b.f64(v.position.x);
        b.f64(v.position.y);
        b.f64(v.heading);
        b.f64(v.speed);
        b.u32(v.route);
        b.f64(v.progress);
        b.f64(v.lateral_deviation);
        b.f64(v.cruise_speed);
        b.f64(v.npc.target_speed);
        b.u8(v.npc.keeps_safety_distance);
        b.u8(v.npc.respects_traffic_lights);
        b.f64(v.prev_heading_error);
        b.u8(v.has_prev_heading_error);
        b.u8(static_cast<std::uint8_t>(v.branch));
        b.u32(v.path_route);
        b.u8(v.path_committed);
        b.f64(v.path_s);
    }
    return b.take();
}

std::vector<core::Event> detect_events(const WorldState& w) {
    std::vector<core::Event> events;
    const double t = w.sim_time();
    const auto& vs = w.vehicles;
    std::vector<bool> collided(vs.size(), false);
    for (std::size_t i = 0; i < vs.size(); ++i) {
        if (!vs[i].active) continue;
        for (std::size_t j = i + 1; j < vs.size(); ++j) {
            if (!vs[j].active) continue;
            if (rects_overlap(vs[i].footprint(), vs[j].footprint())) collided[i] = collided[j] = true;
        }
    }
    for (std::size_t i = 0; i < vs.size(); ++i)
        if (collided[i]) events.push_back({core::EventKind::collision, {static_cast<std::uint32_t>(i)}, t});

    for (std::uint32_t i = 0; i < w.controlled; ++i) {
        const auto& v = vs[i];
        if (!v.active || collided[i]) continue;
        if (v.progress >= w.route_of(v).path.length() - kRouteCompleteSlack)
            events.push_back({core::EventKind::route_complete, {i}, t});
        else if (v.lateral_deviation > kOffRouteDistance)
            events.push_back({core::EventKind::off_route, {i}, t});
    }
    const bool limit = w.tick >= kHorizonTicks;
    const bool stuck = w.still_ticks >= kDeadlockTicks;
    if (limit || stuck) {
        for (std::uint32_t i = 0; i < w.controlled; ++i) {
            if (!vs[i].active || collided[i]) continue;
            bool ended = false;
            for (const auto& e : events) ended |= e.agent.index == i;
            if (ended) continue;
            events.push_back({stuck ? core::EventKind::deadlock : core::EventKind::timeout, {i}, t});
        }
    }
    return events;
}

void update_progress(VehicleState& v, const Route& route, double travelled) {
    const Polyline& path = route.path;
    const Projection pr = path.project(v.position, v.progress - 5.0, v.progress + travelled + 5.0);
    v.lateral_deviation = pr.distance;
    if (pr.distance > kOffRouteDistance) return;
    v.progress = std::clamp(pr.s, v.progress, v.progress + travelled);
}

}  // namespace matsg::sim
