#pragma once

#include <cmath>
#include <vector>

namespace vagn::geom {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2() = default;
    Vec2(double x_, double y_) : x(x_), y(y_) {}

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    Vec2& operator+=(const Vec2& o) {
        x += o.x;
        y += o.y;
        return *this;
    }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

// Wraps an angle to (-pi, pi].
double wrap_angle(double a);

// Unit vector for a heading angle.
inline Vec2 heading_vec(double yaw) { return {std::cos(yaw), std::sin(yaw)}; }

double dist_point_segment(const Vec2& p, const Vec2& a, const Vec2& b);

// Piecewise-linear path with precomputed cumulative arc lengths.
class Polyline {
  public:
    Polyline() = default;
    explicit Polyline(std::vector<Vec2> pts);

    const std::vector<Vec2>& points() const { return pts_; }
    bool empty() const { return pts_.empty(); }
    std::size_t size() const { return pts_.size(); }
    double length() const { return cum_.empty() ? 0.0 : cum_.back(); }

    // Arc length of the closest point on the polyline to p.
    double project(const Vec2& p) const;
    // Point at arc length s, clamped to [0, length()].
    Vec2 point_at(double s) const;
    // Tangent heading (radians) at arc length s.
    double tangent_at(double s) const;
    // Minimum distance from p to the polyline.
    double distance(const Vec2& p) const;

  private:
    std::vector<Vec2> pts_;
    std::vector<double> cum_;
};

using Polygon = std::vector<Vec2>;

}  // namespace vagn::geom
