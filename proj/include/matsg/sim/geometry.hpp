// geometry.hpp - planar primitives: vectors, oriented rectangles, polylines.
#pragma once

#include <array>
#include <cmath>
#include <vector>

namespace matsg::sim {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double cross(Vec2 o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    bool operator==(const Vec2&) const = default;
};

inline Vec2 unit(double heading) { return {std::cos(heading), std::sin(heading)}; }

// Wraps an angle to (-pi, pi].
inline double wrap_angle(double a) {
    a = std::remainder(a, 2.0 * M_PI);
    return a <= -M_PI ? a + 2.0 * M_PI : a;
}

struct OrientedRect {
    Vec2 center;
    double heading = 0.0;
    double half_length = 0.0;
    double half_width = 0.0;

    std::array<Vec2, 4> corners() const;
    bool contains(Vec2 p) const;
};

// Separating-axis test; touching edges count as overlap.
bool rects_overlap(const OrientedRect& a, const OrientedRect& b);

struct Projection {
    double s = 0.0;        // arc length of the closest point
    double lateral = 0.0;  // signed offset, positive to the left of travel
    double distance = 0.0;
    std::size_t segment = 0;
};

class Polyline {
public:
    Polyline() = default;
    explicit Polyline(std::vector<Vec2> points);

    const std::vector<Vec2>& points() const { return points_; }
    double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
    double arc_at_vertex(std::size_t i) const { return cumulative_[i]; }

    // Arc-length parametrized queries; s is clamped to [0, length].
    Vec2 point_at(double s) const;
    double heading_at(double s) const;

    Projection project(Vec2 p) const;
    // Closest point restricted to segments overlapping [s_lo, s_hi].
    Projection project(Vec2 p, double s_lo, double s_hi) const;

    bool operator==(const Polyline& o) const { return points_ == o.points_; }

private:
    std::size_t segment_at(double s) const;
    Projection project_segment(Vec2 p, std::size_t i) const;

    std::vector<Vec2> points_;
    std::vector<double> cumulative_;
};

// Distance from p to the segment [a, b].
double segment_distance(Vec2 p, Vec2 a, Vec2 b);

}  // namespace matsg::sim
