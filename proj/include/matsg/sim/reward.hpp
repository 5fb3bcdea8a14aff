#pragma once

#include <span>

#include "matsg/sim/vehicle.hpp"

namespace matsg::sim {

// Progress along the route since the previous state plus the clamped
// cruise term min(v / v_target, 1).
double compute_reward(const VehicleState& prev, const VehicleState& cur, double v_target);

// Reward of one decision whose action persisted over several ticks: the
// progress term telescopes to end - start, the cruise term is averaged over
// the speeds observed after each tick.
double aggregate_reward(double progress_start, double progress_end, std::span<const double> tick_speeds,
                        double v_target);

}  // namespace matsg::sim
