#include "matsg/sim/reward.hpp"

#include <algorithm>

#include "matsg/core/error.hpp"

namespace matsg::sim {

namespace {
double cruise_term(double speed, double v_target) { return std::min(speed / v_target, 1.0); }
}  // namespace

double compute_reward(const VehicleState& prev, const VehicleState& cur, double v_target) {
    if (!(v_target > 0.0)) throw Error("v_target must be positive");
    return (cur.progress - prev.progress) + cruise_term(cur.speed, v_target);
}

double aggregate_reward(double progress_start, double progress_end, std::span<const double> tick_speeds,
                        double v_target) {
    if (!(v_target > 0.0)) throw Error("v_target must be positive");
    double cruise = 0.0;
    for (double s : tick_speeds) cruise += cruise_term(s, v_target);
    if (!tick_speeds.empty()) cruise /= static_cast<double>(tick_speeds.size());
    return (progress_end - progress_start) + cruise;
}

}  // namespace matsg::sim
