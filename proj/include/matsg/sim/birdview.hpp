// birdview.hpp - ego-centric occupancy grids.
//
// Layout is channel-major [C][H][W]. Column index grows along the ego
// heading, row index grows to the ego's left. The ego reference point sits at
// the centre of cell (H/2, W/4).
#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "matsg/core/posg.hpp"
#include "matsg/sim/world.hpp"

namespace matsg::sim {

enum Channel : int { kDrivable = 0, kLaneMarkings = 1, kVehicles = 2, kRoute = 3 };

inline constexpr int kChannels = 4;
inline constexpr int kGridSize = 64;
inline constexpr double kCellSize = 0.5;
inline constexpr int kEgoRow = kGridSize / 2;
inline constexpr int kEgoCol = kGridSize / 4;

struct BirdviewObservation {
    std::vector<std::uint8_t> grid = std::vector<std::uint8_t>(kChannels * kGridSize * kGridSize, 0);
    std::array<double, 3> ego{};  // speed, v_target, remaining route length

    std::uint8_t at(int c, int row, int col) const { return grid[(c * kGridSize + row) * kGridSize + col]; }
    std::uint8_t& at(int c, int row, int col) { return grid[(c * kGridSize + row) * kGridSize + col]; }
    std::size_t count(int c) const;
    bool operator==(const BirdviewObservation&) const = default;
};

// World position of the centre of grid cell (row, col) for an ego pose.
Vec2 cell_center(Vec2 ego_position, double ego_heading, int row, int col);

BirdviewObservation rasterize_birdview(const WorldState& w, std::uint32_t agent);

// Policy input: binary cells as sparse indices, ego features scaled to O(1).
core::Observation encode_observation(const BirdviewObservation& b);

inline constexpr std::size_t kObservationSize = kChannels * kGridSize * kGridSize + 3;

}  // namespace matsg::sim
