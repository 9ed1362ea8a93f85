#include "vagn/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "vagn/errors.hpp"

namespace vagn::geom {

double wrap_angle(double a) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    a = std::fmod(a, two_pi);
    if (a <= -std::numbers::pi) {
        a += two_pi;
    } else if (a > std::numbers::pi) {
        a -= two_pi;
    }
    return a;
}

double dist_point_segment(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len2 = ab.dot(ab);
    if (len2 <= 0.0) {
        return (p - a).norm();
    }
    const double t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return (p - (a + ab * t)).norm();
}

Polyline::Polyline(std::vector<Vec2> pts) : pts_(std::move(pts)) {
    cum_.resize(pts_.size(), 0.0);
    for (std::size_t i = 1; i < pts_.size(); ++i) {
        cum_[i] = cum_[i - 1] + (pts_[i] - pts_[i - 1]).norm();
    }
}

double Polyline::project(const Vec2& p) const {
    if (pts_.size() < 2) {
        throw SchemaError("polyline projection requires at least 2 points");
    }
    double best_d2 = std::numeric_limits<double>::infinity();
    double best_s = 0.0;
    for (std::size_t i = 0; i + 1 < pts_.size(); ++i) {
        const Vec2 a = pts_[i];
        const Vec2 ab = pts_[i + 1] - a;
        const double len2 = ab.dot(ab);
        double t = 0.0;
        if (len2 > 0.0) {
            t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
        }
        const Vec2 c = a + ab * t;
        const double d2 = (p - c).dot(p - c);
        if (d2 < best_d2) {
            best_d2 = d2;
            best_s = cum_[i] + std::sqrt(len2) * t;
        }
    }
    return best_s;
}

Vec2 Polyline::point_at(double s) const {
    if (pts_.empty()) {
        throw SchemaError("point_at on empty polyline");
    }
    if (pts_.size() == 1 || s <= 0.0) {
        return pts_.front();
    }
    if (s >= length()) {
        return pts_.back();
    }
    const auto it = std::upper_bound(cum_.begin(), cum_.end(), s);
    const std::size_t i = static_cast<std::size_t>(it - cum_.begin()) - 1;
    const double seg = cum_[i + 1] - cum_[i];
    const double t = seg > 0.0 ? (s - cum_[i]) / seg : 0.0;
    return pts_[i] + (pts_[i + 1] - pts_[i]) * t;
}

double Polyline::tangent_at(double s) const {
    if (pts_.size() < 2) {
        throw SchemaError("tangent_at requires at least 2 points");
    }
    double sc = std::clamp(s, 0.0, length());
    std::size_t i = 0;
    if (sc >= length()) {
        i = pts_.size() - 2;
    } else {
        const auto it = std::upper_bound(cum_.begin(), cum_.end(), sc);
        i = static_cast<std::size_t>(it - cum_.begin());
        i = i > 0 ? i - 1 : 0;
        if (i + 1 >= pts_.size()) {
            i = pts_.size() - 2;
        }
    }
    const Vec2 d = pts_[i + 1] - pts_[i];
    return std::atan2(d.y, d.x);
}

double Polyline::distance(const Vec2& p) const {
    double best = std::numeric_limits<double>::infinity();
    if (pts_.size() == 1) {
        return (p - pts_[0]).norm();
    }
    for (std::size_t i = 0; i + 1 < pts_.size(); ++i) {
        best = std::min(best, dist_point_segment(p, pts_[i], pts_[i + 1]));
    }
    return best;
}

}  // namespace vagn::geom
