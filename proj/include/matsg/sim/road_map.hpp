// road_map.hpp - lanes, routes, spawn slots and signal timing of a junction.
#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "matsg/sim/geometry.hpp"

namespace matsg::sim {

enum class Maneuver { straight, left, right };
std::string_view maneuver_name(Maneuver m);
std::optional<Maneuver> maneuver_from_name(std::string_view s);

enum class LaneKind { inbound, outbound, connector };

struct Lane {
    std::string id;
    LaneKind kind = LaneKind::inbound;
    double width = 3.5;
    Polyline centerline;
};

struct Route {
    std::string name;
    std::string approach;
    Maneuver maneuver = Maneuver::straight;
    std::vector<std::string> lanes;
    // Derived: concatenated centerline and the arc length of the stop line
    // (end of the inbound lane).
    Polyline path;
    double stop_line_s = 0.0;
};

struct SpawnSlot {
    std::string lane;
    double offset = 0.0;  // arc length from the lane start
};

// An inbound lane controlled by a signal head; heads share one cycle and
// differ by their phase offset.
struct SignalHead {
    std::string lane;
    double offset = 0.0;
};

struct SignalTiming {
    double green = 15.0;
    double amber = 3.0;
    double red = 18.0;
    double cycle() const { return green + amber + red; }
};

enum class LightState { green, amber, red };

class RoadMap {
public:
    std::string id;
    std::vector<Lane> lanes;
    std::vector<Vec2> box;  // convex junction polygon, counter-clockwise
    std::vector<Route> routes;
    std::vector<SpawnSlot> spawn_slots;
    std::vector<SignalHead> signals;
    SignalTiming timing;

    // Resolves route paths and builds the lookup index. Throws matsg::Error
    // when lanes, routes or slots are inconsistent.
    void finalize();

    const Lane* find_lane(std::string_view id) const;
    std::optional<std::size_t> route_index(std::string_view approach, Maneuver m) const;
    std::vector<std::string> approaches() const;  // in order of first appearance
    // Approach whose inbound lane holds the slot.
    std::string slot_approach(std::size_t slot) const;
    // Position and heading of a spawn slot along its lane.
    std::pair<Vec2, double> slot_pose(std::size_t slot) const;

    LightState light(std::string_view inbound_lane, double time, double cycle_offset) const;

    bool in_box(Vec2 p) const;
    bool drivable(Vec2 p) const;
    bool lane_marking(Vec2 p) const;

    // World-frame bounds of all lanes.
    Vec2 min_corner() const { return lo_; }
    Vec2 max_corner() const { return hi_; }

private:
    struct SegmentRef {
        std::uint32_t lane;
        std::uint32_t segment;
    };
    const std::vector<SegmentRef>* bucket(Vec2 p) const;

    Vec2 lo_, hi_;
    double bucket_size_ = 2.0;
    int nx_ = 0, ny_ = 0;
    std::vector<std::vector<SegmentRef>> buckets_;
};

// The canonical four-way junction: one 3.5 m lane per direction, 30 m arms,
// three spawn slots per approach, two-axis signal.
RoadMap make_fourway();

std::string format_map(const RoadMap& map);
RoadMap parse_map(std::string_view text);  // throws matsg::Error with a line number
RoadMap load_map(const std::string& path);

// Looks up a built-in map by id, falling back to `<dir>/<id>.map`.
std::shared_ptr<const RoadMap> resolve_map(std::string_view id, const std::string& dir = "");

}  // namespace matsg::sim
