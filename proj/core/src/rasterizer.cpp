#include <algorithm>
#include <cmath>

#include "vagn/errors.hpp"
#include "vagn/simulator.hpp"

namespace vagn::sim {

namespace {

using geom::Vec2;

constexpr double kVehicleLength = 4.5;
constexpr double kVehicleWidth = 2.0;

// World -> continuous pixel coordinates, ego centered, heading up:
// row grows opposite the heading, column grows to the ego's right.
struct Frame {
    Vec2 ego;
    Vec2 h;   // heading unit vector
    double res;
    double half;  // size/2 in pixels

    Vec2 to_px(const Vec2& p) const {
        const Vec2 d = p - ego;
        const double forward = d.dot(h);
        const double left = d.dot({-h.y, h.x});
        return {half - left / res, half - forward / res};  // (col, row)
    }
};

void fill_polygon(std::vector<double>& ch, int size, const std::vector<Vec2>& px, double value) {
    if (px.size() < 3) {
        return;
    }
    double rmin = 1e18, rmax = -1e18;
    for (const Vec2& p : px) {
        rmin = std::min(rmin, p.y);
        rmax = std::max(rmax, p.y);
    }
    const int r0 = std::max(0, static_cast<int>(std::floor(rmin)));
    const int r1 = std::min(size - 1, static_cast<int>(std::ceil(rmax)));
    std::vector<double> xs;
    for (int r = r0; r <= r1; ++r) {
        const double y = r + 0.5;
        xs.clear();
        for (std::size_t i = 0; i < px.size(); ++i) {
            const Vec2& a = px[i];
            const Vec2& b = px[(i + 1) % px.size()];
            if ((a.y <= y && b.y > y) || (b.y <= y && a.y > y)) {
                xs.push_back(a.x + (y - a.y) / (b.y - a.y) * (b.x - a.x));
            }
        }
        std::sort(xs.begin(), xs.end());
        for (std::size_t i = 0; i + 1 < xs.size(); i += 2) {
            const int c0 = std::max(0, static_cast<int>(std::ceil(xs[i] - 0.5)));
            const int c1 = std::min(size - 1, static_cast<int>(std::floor(xs[i + 1] - 0.5)));
            for (int c = c0; c <= c1; ++c) {
                ch[static_cast<std::size_t>(r * size + c)] = value;
            }
        }
    }
}

// 2-px-wide stroke: pixels whose center is within one pixel of the segment.
void stroke_segment(std::vector<double>& ch, int size, const Vec2& a, const Vec2& b) {
    const double pad = 1.5;
    const int r0 = std::max(0, static_cast<int>(std::floor(std::min(a.y, b.y) - pad)));
    const int r1 = std::min(size - 1, static_cast<int>(std::ceil(std::max(a.y, b.y) + pad)));
    const int c0 = std::max(0, static_cast<int>(std::floor(std::min(a.x, b.x) - pad)));
    const int c1 = std::min(size - 1, static_cast<int>(std::ceil(std::max(a.x, b.x) + pad)));
    if (r0 > r1 || c0 > c1) {
        return;
    }
    for (int r = r0; r <= r1; ++r) {
        for (int c = c0; c <= c1; ++c) {
            const Vec2 p{c + 0.5, r + 0.5};
            if (geom::dist_point_segment(p, a, b) <= 1.0) {
                ch[static_cast<std::size_t>(r * size + c)] = 1.0;
            }
        }
    }
}

void stroke_polyline(std::vector<double>& ch, int size, const Frame& f, const geom::Polyline& line) {
    const auto& pts = line.points();
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        stroke_segment(ch, size, f.to_px(pts[i]), f.to_px(pts[i + 1]));
    }
}

void fill_vehicle(std::vector<double>& ch, int size, const Frame& f, const Vec2& pos, double yaw) {
    const Vec2 h = geom::heading_vec(yaw);
    const Vec2 left{-h.y, h.x};
    const Vec2 fore = h * (kVehicleLength / 2.0);
    const Vec2 side = left * (kVehicleWidth / 2.0);
    std::vector<Vec2> corners{
        f.to_px(pos + fore + side),
        f.to_px(pos + fore - side),
        f.to_px(pos - fore - side),
        f.to_px(pos - fore + side),
    };
    fill_polygon(ch, size, corners, 1.0);
}

}  // namespace

vision::BevRaster rasterize(const Scene& scene, const ctrl::EgoState& ego, int t,
                            const RasterSpec& spec) {
    if (t < 0 || t >= scene.steps) {
        throw SchemaError("rasterize: step index out of range");
    }
    const int size = spec.size;
    Frame f;
    f.ego = ego.position;
    f.h = geom::heading_vec(ego.yaw());
    f.res = spec.resolution;
    f.half = size / 2.0;

    ad::Tensor channels = ad::Tensor::zeros({spec.channels, size, size});
    const int hw = size * size;
    auto chan = [&](int c) {
        return std::vector<double>(channels.data.begin() + c * hw,
                                   channels.data.begin() + (c + 1) * hw);
    };
    auto store = [&](int c, const std::vector<double>& buf) {
        std::copy(buf.begin(), buf.end(), channels.data.begin() + c * hw);
    };

    // 0: drivable area (holes subtracted)
    std::vector<double> drivable = chan(0);
    for (const auto& poly : scene.map.drivable) {
        std::vector<Vec2> px;
        px.reserve(poly.size());
        for (const Vec2& p : poly) {
            px.push_back(f.to_px(p));
        }
        fill_polygon(drivable, size, px, 1.0);
    }
    for (const auto& poly : scene.map.holes) {
        std::vector<Vec2> px;
        px.reserve(poly.size());
        for (const Vec2& p : poly) {
            px.push_back(f.to_px(p));
        }
        fill_polygon(drivable, size, px, 0.0);
    }
    store(0, drivable);

    // 1: lane centerlines, 2: road boundaries
    std::vector<double> lanes = chan(1);
    for (const auto& line : scene.map.centerlines) {
        stroke_polyline(lanes, size, f, line);
    }
    store(1, lanes);
    std::vector<double> bounds = chan(2);
    for (const auto& line : scene.map.boundaries) {
        stroke_polyline(bounds, size, f, line);
    }
    store(2, bounds);

    // 3: ado vehicles at this step
    std::vector<double> ados = chan(3);
    for (const AdoTrack& ado : scene.ados) {
        const auto& pose = ado.poses[static_cast<std::size_t>(t)];
        fill_vehicle(ados, size, f, {pose[0], pose[1]}, pose[2]);
    }
    store(3, ados);

    // 4: ego footprint, always centered
    std::vector<double> egoc = chan(4);
    fill_vehicle(egoc, size, f, ego.position, ego.yaw());
    store(4, egoc);

    return vision::BevRaster{std::move(channels), spec.resolution};
}

}  // namespace vagn::sim
