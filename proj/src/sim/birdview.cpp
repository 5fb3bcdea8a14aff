#include "matsg/sim/birdview.hpp"

#include <algorithm>
#include <cmath>

namespace matsg::sim {

std::size_t BirdviewObservation::count(int c) const {
    const auto first = grid.begin() + c * kGridSize * kGridSize;
    return static_cast<std::size_t>(std::count(first, first + kGridSize * kGridSize, std::uint8_t{1}));
}

Vec2 cell_center(Vec2 ego_position, double ego_heading, int row, int col) {
    const double fx = (col - kEgoCol) * kCellSize;
    const double fy = (row - kEgoRow) * kCellSize;
    const double c = std::cos(ego_heading), s = std::sin(ego_heading);
    return {ego_position.x + c * fx - s * fy, ego_position.y + s * fx + c * fy};
}

BirdviewObservation rasterize_birdview(const WorldState& w, std::uint32_t agent) {
    BirdviewObservation out;
    const auto& ego = w.vehicles.at(agent);
    const RoadMap& map = *w.map;
    const Route& route = w.route_of(ego);
    const Polyline& path = route.path;
    const double half_lane = map.find_lane(route.lanes.front())->width / 2.0;

    for (int row = 0; row < kGridSize; ++row) {
        for (int col = 0; col < kGridSize; ++col) {
            const Vec2 q = cell_center(ego.position, ego.heading, row, col);
            if (map.drivable(q)) out.at(kDrivable, row, col) = 1;
            if (map.lane_marking(q)) out.at(kLaneMarkings, row, col) = 1;
        }
    }

    const double c = std::cos(ego.heading), s = std::sin(ego.heading);
    auto to_ego = [&](Vec2 p) {
        const Vec2 d = p - ego.position;
        return Vec2{c * d.x + s * d.y, -s * d.x + c * d.y};
    };
    auto cell_range = [](double lo, double hi, int origin) {
        const int a = std::max(0, static_cast<int>(std::floor(lo / kCellSize)) + origin - 1);
        const int b = std::min(kGridSize - 1, static_cast<int>(std::ceil(hi / kCellSize)) + origin + 1);
        return std::pair{a, b};
    };

    // Remaining route: cells within half a lane of the path beyond the
    // current progress, drawn segment by segment.
    const auto& pts = path.points();
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        if (path.arc_at_vertex(i + 1) <= ego.progress) continue;
        const Vec2 a = path.arc_at_vertex(i) < ego.progress ? path.point_at(ego.progress) : pts[i];
        const Vec2 b = pts[i + 1];
        const Vec2 ea = to_ego(a), eb = to_ego(b);
        const auto [col0, col1] = cell_range(std::min(ea.x, eb.x) - half_lane, std::max(ea.x, eb.x) + half_lane, kEgoCol);
        const auto [row0, row1] = cell_range(std::min(ea.y, eb.y) - half_lane, std::max(ea.y, eb.y) + half_lane, kEgoRow);
        for (int row = row0; row <= row1; ++row)
            for (int col = col0; col <= col1; ++col) {
                if (out.at(kRoute, row, col)) continue;
                if (segment_distance(cell_center(ego.position, ego.heading, row, col), a, b) <= half_lane)
                    out.at(kRoute, row, col) = 1;
            }
    }

    // Vehicle footprints, the ego included, tested in the ego frame where
    // cell centres are exact multiples of the cell size. Each vehicle is
    // scanned over the cells covered by its bounding circle.
    const double radius = std::hypot(kVehicleLength, kVehicleWidth) / 2.0;
    for (std::uint32_t i = 0; i < w.vehicles.size(); ++i) {
        const auto& v = w.vehicles[i];
        if (!v.active && i != agent) continue;
        const Vec2 e = to_ego(v.position);
        const auto [col0, col1] = cell_range(e.x - radius, e.x + radius, kEgoCol);
        const auto [row0, row1] = cell_range(e.y - radius, e.y + radius, kEgoRow);
        const OrientedRect rect{e, i == agent ? 0.0 : wrap_angle(v.heading - ego.heading), kVehicleLength / 2.0,
                                kVehicleWidth / 2.0};
        for (int row = row0; row <= row1; ++row)
            for (int col = col0; col <= col1; ++col)
                if (rect.contains({(col - kEgoCol) * kCellSize, (row - kEgoRow) * kCellSize}))
                    out.at(kVehicles, row, col) = 1;
    }

    out.ego = {ego.speed, ego.cruise_speed, std::max(0.0, path.length() - ego.progress)};
    return out;
}

core::Observation encode_observation(const BirdviewObservation& b) {
    core::Observation o;
    o.binary_size = static_cast<std::uint32_t>(b.grid.size());
    for (std::uint32_t i = 0; i < b.grid.size(); ++i)
        if (b.grid[i]) o.active.push_back(i);
    o.dense = {b.ego[0] / kMaxSpeed, b.ego[1] / kMaxSpeed, b.ego[2] / 100.0};
    return o;
}

}  // namespace matsg::sim
