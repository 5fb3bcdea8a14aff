#include "matsg/sim/vehicle.hpp"

#include <algorithm>

namespace matsg::sim {

VehicleState advance_kinematics(const VehicleState& v, double throttle, double steer, double dt) {
    throttle = std::clamp(throttle, -1.0, 1.0);
    steer = std::clamp(steer, -1.0, 1.0);
    VehicleState out = v;
    const double accel = throttle >= 0.0 ? throttle * kMaxAccel : throttle * kMaxBrake;
    out.speed = std::clamp(v.speed + accel * dt, 0.0, kMaxSpeed);
    out.position = v.position + unit(v.heading) * (out.speed * dt);
    out.heading = wrap_angle(v.heading + out.speed / kWheelbase * std::tan(steer * kMaxSteerAngle) * dt);
    return out;
}

double accel_to_throttle(double accel) {
    const double t = accel >= 0.0 ? accel / kMaxAccel : accel / kMaxBrake;
    return std::clamp(t, -1.0, 1.0);
}

}  // namespace matsg::sim
