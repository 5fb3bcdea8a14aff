#include "matsg/sim/geometry.hpp"

#include <algorithm>
#include <limits>

#include "matsg/core/error.hpp"

namespace matsg::sim {

std::array<Vec2, 4> OrientedRect::corners() const {
    const Vec2 f = unit(heading) * half_length;
    const Vec2 l = unit(heading + M_PI / 2.0) * half_width;
    return {center + f + l, center - f + l, center - f - l, center + f - l};
}

bool OrientedRect::contains(Vec2 p) const {
    const Vec2 d = p - center;
    const Vec2 f = unit(heading);
    const double lon = d.dot(f);
    const double lat = d.cross(f);
    return std::abs(lon) <= half_length && std::abs(lat) <= half_width;
}

bool rects_overlap(const OrientedRect& a, const OrientedRect& b) {
    const auto ca = a.corners();
    const auto cb = b.corners();
    const Vec2 axes[4] = {unit(a.heading), unit(a.heading + M_PI / 2.0), unit(b.heading),
                          unit(b.heading + M_PI / 2.0)};
    for (const Vec2& axis : axes) {
        double amin = std::numeric_limits<double>::infinity(), amax = -amin;
        double bmin = amin, bmax = -amin;
        for (const Vec2& c : ca) {
            const double v = c.dot(axis);
            amin = std::min(amin, v);
            amax = std::max(amax, v);
        }
        for (const Vec2& c : cb) {
            const double v = c.dot(axis);
            bmin = std::min(bmin, v);
            bmax = std::max(bmax, v);
        }
        if (amax < bmin || bmax < amin) return false;
    }
    return true;
}

double segment_distance(Vec2 p, Vec2 a, Vec2 b) {
    const Vec2 ab = b - a;
    const double len2 = ab.dot(ab);
    double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return (p - (a + ab * t)).norm();
}

Polyline::Polyline(std::vector<Vec2> points) : points_(std::move(points)) {
    if (points_.size() < 2) throw Error("polyline needs at least two points");
    cumulative_.resize(points_.size());
    cumulative_[0] = 0.0;
    for (std::size_t i = 1; i < points_.size(); ++i)
        cumulative_[i] = cumulative_[i - 1] + (points_[i] - points_[i - 1]).norm();
}

std::size_t Polyline::segment_at(double s) const {
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    std::size_t i = it == cumulative_.begin() ? 0 : static_cast<std::size_t>(it - cumulative_.begin()) - 1;
    return std::min(i, points_.size() - 2);
}

Vec2 Polyline::point_at(double s) const {
    s = std::clamp(s, 0.0, length());
    const std::size_t i = segment_at(s);
    const double seg = cumulative_[i + 1] - cumulative_[i];
    const double t = seg > 0.0 ? (s - cumulative_[i]) / seg : 0.0;
    return points_[i] + (points_[i + 1] - points_[i]) * t;
}

double Polyline::heading_at(double s) const {
    const std::size_t i = segment_at(std::clamp(s, 0.0, length()));
    const Vec2 d = points_[i + 1] - points_[i];
    return std::atan2(d.y, d.x);
}

Projection Polyline::project_segment(Vec2 p, std::size_t i) const {
    const Vec2 a = points_[i], b = points_[i + 1];
    const Vec2 ab = b - a;
    const double len2 = ab.dot(ab);
    double t = len2 > 0.0 ? (p - a).dot(ab) / len2 : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    const Vec2 q = a + ab * t;
    Projection pr;
    pr.s = cumulative_[i] + t * std::sqrt(len2);
    pr.distance = (p - q).norm();
    const double side = len2 > 0.0 ? ab.cross(p - a) : 0.0;
    pr.lateral = side >= 0.0 ? pr.distance : -pr.distance;
    pr.segment = i;
    return pr;
}

Projection Polyline::project(Vec2 p) const { return project(p, 0.0, length()); }

Projection Polyline::project(Vec2 p, double s_lo, double s_hi) const {
    Projection best;
    best.distance = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
        if (cumulative_[i + 1] < s_lo || cumulative_[i] > s_hi) continue;
        Projection pr = project_segment(p, i);
        if (pr.distance < best.distance) best = pr;
    }
    if (!std::isfinite(best.distance)) best = project_segment(p, segment_at(std::clamp(s_lo, 0.0, length())));
    return best;
}

}  // namespace matsg::sim
