// world.hpp - full simulator state, traffic events and canonical serialization.
#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "matsg/core/posg.hpp"
#include "matsg/sim/road_map.hpp"
#include "matsg/sim/vehicle.hpp"

namespace matsg::sim {

inline constexpr std::uint64_t kHorizonTicks = 400;
inline constexpr std::uint32_t kDeadlockTicks = 100;
inline constexpr double kDeadlockSpeed = 0.1;
inline constexpr double kOffRouteDistance = 3.0;
inline constexpr double kRouteCompleteSlack = 0.5;

struct WorldState {
    std::shared_ptr<const RoadMap> map;
    std::vector<VehicleState> vehicles;  // controlled agents first, then NPCs
    std::uint32_t controlled = 0;
    std::uint64_t tick = 0;
    double light_offset = 0.0;
    std::uint32_t still_ticks = 0;  // consecutive ticks with every active agent below kDeadlockSpeed

    double sim_time() const { return static_cast<double>(tick) * kTick; }
    const Route& route_of(const VehicleState& v) const { return map->routes[v.route]; }
    bool any_controlled_active() const;
};

// Little-endian byte image of every field; equal states give equal bytes.
std::vector<std::uint8_t> serialize(const WorldState& w);

// Events implied by the current state: pairwise footprint overlap among
// active vehicles, route completion, off-route deviation for controlled
// agents, deadlock and timeout. Pure.
std::vector<core::Event> detect_events(const WorldState& w);

// Moves route progress after a kinematic step. Progress never decreases,
// advances at most `travelled`, and freezes while the vehicle is more than
// kOffRouteDistance from its route.
void update_progress(VehicleState& v, const Route& route, double travelled);

}  // namespace matsg::sim
