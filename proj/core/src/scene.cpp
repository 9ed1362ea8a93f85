#include "vagn/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <random>

#include <json.hpp>

#include "vagn/errors.hpp"
#include "vagn/simulator.hpp"

namespace vagn::sim {

namespace {

using geom::Vec2;
using nlohmann::json;

constexpr double kLaneWidth = 3.5;
constexpr double kPi = std::numbers::pi;

const char* kKindNames[] = {"straight", "curve", "intersection", "roundabout", "cut_in"};

std::vector<Vec2> make_straight(Vec2 start, double heading, double length, double step = 2.0) {
    std::vector<Vec2> pts;
    const Vec2 dir = geom::heading_vec(heading);
    const int n = std::max(2, static_cast<int>(std::ceil(length / step)) + 1);
    for (int i = 0; i < n; ++i) {
        const double s = length * i / (n - 1);
        pts.push_back(start + dir * s);
    }
    return pts;
}

// Arc from angle a0 to a1 (radians, signed sweep) around `center`.
std::vector<Vec2> make_arc(Vec2 center, double radius, double a0, double a1, double step = 2.0) {
    const double sweep = a1 - a0;
    const int n = std::max(3, static_cast<int>(std::ceil(std::abs(sweep) * radius / step)) + 1);
    std::vector<Vec2> pts;
    for (int i = 0; i < n; ++i) {
        const double a = a0 + sweep * i / (n - 1);
        pts.push_back(center + Vec2{std::cos(a), std::sin(a)} * radius);
    }
    return pts;
}

std::vector<Vec2> concat_paths(std::vector<Vec2> a, const std::vector<Vec2>& b) {
    for (const Vec2& p : b) {
        if (a.empty() || (p - a.back()).norm() > 1e-9) {
            a.push_back(p);
        }
    }
    return a;
}

// Lateral offset of a polyline; positive d moves toward the left normal.
std::vector<Vec2> offset_polyline(const std::vector<Vec2>& pts, double d) {
    std::vector<Vec2> out(pts.size());
    for (std::size_t i = 0; i < pts.size(); ++i) {
        Vec2 t{0.0, 0.0};
        if (i > 0) {
            t += pts[i] - pts[i - 1];
        }
        if (i + 1 < pts.size()) {
            t += pts[i + 1] - pts[i];
        }
        const double n = t.norm();
        if (n < 1e-12) {
            out[i] = pts[i];
            continue;
        }
        const Vec2 left{-t.y / n, t.x / n};
        out[i] = pts[i] + left * d;
    }
    return out;
}

geom::Polygon strip_polygon(const std::vector<Vec2>& spine, double half_width) {
    const std::vector<Vec2> left = offset_polyline(spine, half_width);
    std::vector<Vec2> right = offset_polyline(spine, -half_width);
    geom::Polygon poly = left;
    poly.insert(poly.end(), right.rbegin(), right.rend());
    return poly;
}

// Two-lane road around a spine. `same_direction` marks the left lane as a
// same-direction lane (cut-in scenes) rather than oncoming.
struct Road {
    std::vector<Vec2> spine;
    geom::Polyline ego_lane;    // right lane center
    geom::Polyline other_lane;  // left lane center
};

Road add_two_lane_road(SceneMap& map, const std::vector<Vec2>& spine) {
    Road road;
    road.spine = spine;
    road.ego_lane = geom::Polyline(offset_polyline(spine, -kLaneWidth / 2.0));
    road.other_lane = geom::Polyline(offset_polyline(spine, kLaneWidth / 2.0));
    map.drivable.push_back(strip_polygon(spine, kLaneWidth));
    map.centerlines.push_back(road.ego_lane);
    map.centerlines.push_back(road.other_lane);
    map.boundaries.emplace_back(offset_polyline(spine, kLaneWidth));
    map.boundaries.emplace_back(offset_polyline(spine, -kLaneWidth));
    return road;
}

// Arc length of a polyline at the point closest to `p`, plus its length.
struct PathTrack {
    geom::Polyline path;
    double speed = 6.0;
    double start_s = 0.0;
    // Optional deceleration: after `slow_after_s`, speed eases to slow_speed.
    double slow_after_s = -1.0;
    double slow_speed = 6.0;
};

AdoTrack sample_track(const PathTrack& track, int steps, double dt) {
    AdoTrack out;
    double s = track.start_s;
    double v = track.speed;
    for (int t = 0; t < steps; ++t) {
        const Vec2 p = track.path.point_at(s);
        out.poses.push_back({p.x, p.y, track.path.tangent_at(s)});
        if (track.slow_after_s >= 0.0 && s > track.slow_after_s) {
            v = std::max(track.slow_speed, v - 2.0 * dt);
        }
        s += v * dt;
    }
    return out;
}

struct SceneDraft {
    SceneMap map;
    geom::Polyline route;
    std::vector<PathTrack> ado_paths;
    double init_speed = 6.0;
};

SceneDraft draft_straight(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double heading = (unif(rng) * 2.0 - 1.0) * kPi * 0.95;
    SceneDraft d;
    const auto spine = make_straight({0.0, 0.0}, heading, 185.0);
    const Road road = add_two_lane_road(d.map, spine);
    d.route = road.ego_lane;
    if (unif(rng) < 0.5) {
        // Slow lead vehicle in the ego lane.
        PathTrack lead;
        lead.path = road.ego_lane;
        lead.start_s = 40.0 + unif(rng) * 20.0;
        lead.speed = 4.0 + unif(rng) * 2.0;
        d.ado_paths.push_back(lead);
    } else {
        // Oncoming traffic in the left lane.
        PathTrack oncoming;
        auto pts = road.other_lane.points();
        std::reverse(pts.begin(), pts.end());
        oncoming.path = geom::Polyline(pts);
        oncoming.start_s = 20.0 + unif(rng) * 40.0;
        oncoming.speed = 6.0 + unif(rng) * 2.0;
        d.ado_paths.push_back(oncoming);
    }
    return d;
}

SceneDraft draft_curve(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double heading = (unif(rng) * 2.0 - 1.0) * kPi * 0.95;
    const double radius = 35.0 + unif(rng) * 25.0;
    const double sweep = (0.9 + unif(rng) * 0.6) * (unif(rng) < 0.5 ? 1.0 : -1.0);
    const double lead_in = 25.0 + unif(rng) * 15.0;

    const Vec2 dir = geom::heading_vec(heading);
    const Vec2 bend_start = Vec2{0.0, 0.0} + dir * lead_in;
    const Vec2 left{-dir.y, dir.x};
    const Vec2 center = bend_start + left * (sweep > 0 ? radius : -radius);
    const double a0 = std::atan2(bend_start.y - center.y, bend_start.x - center.x);
    const double a1 = a0 + sweep;

    auto spine = make_straight({0.0, 0.0}, heading, lead_in);
    spine = concat_paths(std::move(spine), make_arc(center, radius, a0, a1));
    const double exit_heading = heading + sweep;
    spine = concat_paths(std::move(spine), make_straight(spine.back(), exit_heading, 60.0));

    SceneDraft d;
    const Road road = add_two_lane_road(d.map, spine);
    d.route = road.ego_lane;
    PathTrack oncoming;
    auto pts = road.other_lane.points();
    std::reverse(pts.begin(), pts.end());
    oncoming.path = geom::Polyline(pts);
    oncoming.start_s = 30.0 + unif(rng) * 50.0;
    oncoming.speed = 5.0 + unif(rng) * 3.0;
    d.ado_paths.push_back(oncoming);
    return d;
}

SceneDraft draft_intersection(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double heading = (unif(rng) * 2.0 - 1.0) * kPi * 0.95;
    const double s_cross = 60.0 + unif(rng) * 25.0;

    SceneDraft d;
    const auto spine = make_straight({0.0, 0.0}, heading, 185.0);
    const Road road = add_two_lane_road(d.map, spine);
    d.route = road.ego_lane;

    // Perpendicular cross road through the spine point at s_cross.
    const Vec2 dir = geom::heading_vec(heading);
    // Reopen the main-road boundaries across the intersection box.
    {
        const Vec2 origin{0.0, 0.0};
        std::vector<geom::Polyline> clipped;
        for (double off : {kLaneWidth, -kLaneWidth}) {
            const auto full = offset_polyline(spine, off);
            std::vector<Vec2> seg;
            for (const Vec2& p : full) {
                const double along = (p - origin).dot(dir);
                if (std::abs(along - s_cross) > kLaneWidth + 1.0) {
                    seg.push_back(p);
                } else if (seg.size() >= 2) {
                    clipped.emplace_back(std::move(seg));
                    seg.clear();
                } else {
                    seg.clear();
                }
            }
            if (seg.size() >= 2) {
                clipped.emplace_back(std::move(seg));
            }
        }
        d.map.boundaries.resize(d.map.boundaries.size() - 2);
        for (auto& b : clipped) {
            d.map.boundaries.push_back(std::move(b));
        }
    }
    const Vec2 cross_dir{-dir.y, dir.x};
    const Vec2 cross_pt = Vec2{0.0, 0.0} + dir * s_cross;
    const double cross_heading = std::atan2(cross_dir.y, cross_dir.x);
    const double side = unif(rng) < 0.5 ? 1.0 : -1.0;
    const Vec2 cross_start = cross_pt + cross_dir * (-side * 70.0);
    const auto cross_spine = make_straight(cross_start, side > 0 ? cross_heading : cross_heading + kPi,
                                           140.0);
    d.map.drivable.push_back(strip_polygon(cross_spine, kLaneWidth));
    d.map.centerlines.emplace_back(offset_polyline(cross_spine, -kLaneWidth / 2.0));
    // Cross-road boundaries stop short of the main road.
    auto clip_boundary = [&](double off) {
        const auto full = offset_polyline(cross_spine, off);
        std::vector<Vec2> seg1, seg2;
        for (const Vec2& p : full) {
            const double along = (p - cross_pt).dot(cross_dir) * side;
            if (along < -kLaneWidth - 1.0) {
                seg1.push_back(p);
            } else if (along > kLaneWidth + 1.0) {
                seg2.push_back(p);
            }
        }
        if (seg1.size() >= 2) {
            d.map.boundaries.emplace_back(std::move(seg1));
        }
        if (seg2.size() >= 2) {
            d.map.boundaries.emplace_back(std::move(seg2));
        }
    };
    clip_boundary(kLaneWidth);
    clip_boundary(-kLaneWidth);

    // Crossing vehicle timed to clear the conflict point just before the ego.
    PathTrack crossing;
    crossing.path = geom::Polyline(offset_polyline(cross_spine, -kLaneWidth / 2.0));
    crossing.speed = 5.0 + unif(rng) * 2.5;
    const double ado_s_cross = crossing.path.project(cross_pt);
    const double ego_eta = s_cross / 7.0;
    const double lead_time = 1.0 + unif(rng) * 1.5;
    crossing.start_s = std::max(0.0, ado_s_cross - crossing.speed * (ego_eta - lead_time));
    d.ado_paths.push_back(crossing);
    return d;
}

SceneDraft draft_roundabout(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double heading = (unif(rng) * 2.0 - 1.0) * kPi * 0.95;
    const double ring_r = 14.0 + unif(rng) * 5.0;
    const double entry_len = 35.0 + unif(rng) * 10.0;
    const double sweep = (0.7 + unif(rng) * 0.5) * kPi;  // counterclockwise travel

    const Vec2 dir = geom::heading_vec(heading);
    const Vec2 left{-dir.y, dir.x};
    const Vec2 tangent_pt = Vec2{0.0, 0.0} + dir * entry_len;
    const Vec2 center = tangent_pt + left * ring_r;
    const double a0 = std::atan2(tangent_pt.y - center.y, tangent_pt.x - center.x);
    const double a1 = a0 + sweep;

    auto route_pts = make_straight({0.0, 0.0}, heading, entry_len);
    route_pts = concat_paths(std::move(route_pts), make_arc(center, ring_r, a0, a1, 1.5));
    const double exit_heading = heading + sweep;
    route_pts = concat_paths(std::move(route_pts), make_straight(route_pts.back(), exit_heading, 60.0));

    SceneDraft d;
    d.route = geom::Polyline(route_pts);
    d.map.centerlines.push_back(d.route);

    // Annulus drivable area with the island subtracted; wide circulating lane.
    const double outer_r = ring_r + 4.5;
    const double inner_r = std::max(2.0, ring_r - 4.5);
    d.map.drivable.push_back(make_arc(center, outer_r, 0.0, 2.0 * kPi, 1.5));
    d.map.holes.push_back(make_arc(center, inner_r, 0.0, 2.0 * kPi, 1.5));
    d.map.boundaries.emplace_back(make_arc(center, inner_r, 0.0, 2.0 * kPi, 1.5));

    // Entry and exit approach strips.
    const auto entry_spine = make_straight({0.0, 0.0}, heading, entry_len);
    d.map.drivable.push_back(strip_polygon(entry_spine, kLaneWidth));
    d.map.boundaries.emplace_back(offset_polyline(entry_spine, kLaneWidth));
    d.map.boundaries.emplace_back(offset_polyline(entry_spine, -kLaneWidth));
    const Vec2 exit_start = center + Vec2{std::cos(a1), std::sin(a1)} * ring_r;
    const auto exit_spine = make_straight(exit_start, exit_heading, 60.0);
    d.map.drivable.push_back(strip_polygon(exit_spine, kLaneWidth));
    d.map.boundaries.emplace_back(offset_polyline(exit_spine, kLaneWidth));
    d.map.boundaries.emplace_back(offset_polyline(exit_spine, -kLaneWidth));

    // Outer ring boundary, leaving mouths open at the entry and exit.
    const double mouth = 0.35;
    double from = a0 + mouth;
    double to = a1 - mouth;
    if (to > from) {
        d.map.boundaries.emplace_back(make_arc(center, outer_r, from, to, 1.5));
    }
    d.map.boundaries.emplace_back(make_arc(center, outer_r, a1 + mouth, a0 + 2.0 * kPi - mouth, 1.5));

    // Vehicle circulating the ring for the whole horizon.
    PathTrack circ;
    circ.path = geom::Polyline(make_arc(center, ring_r, a0 - 2.0 * kPi * 0.6, a0 + 2.5 * kPi, 1.5));
    circ.speed = 4.0 + unif(rng) * 2.0;
    circ.start_s = (0.2 + unif(rng) * 0.5) * 2.0 * kPi * 0.6 * ring_r;
    d.ado_paths.push_back(circ);
    d.init_speed = 5.0;
    return d;
}

SceneDraft draft_cut_in(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double heading = (unif(rng) * 2.0 - 1.0) * kPi * 0.95;
    SceneDraft d;
    const auto spine = make_straight({0.0, 0.0}, heading, 185.0);
    const Road road = add_two_lane_road(d.map, spine);
    d.route = road.ego_lane;

    // Faster vehicle in the left (same-direction) lane merging into the ego
    // lane ahead, then easing off.
    const double merge_start = 25.0 + unif(rng) * 20.0;
    const double merge_len = 18.0 + unif(rng) * 8.0;
    std::vector<Vec2> path;
    const auto& left_pts = road.other_lane.points();
    const geom::Polyline& ego_lane = road.ego_lane;
    geom::Polyline left_lane(left_pts);
    for (double s = 0.0; s <= left_lane.length(); s += 2.0) {
        double blend = 0.0;
        if (s > merge_start + merge_len) {
            blend = 1.0;
        } else if (s > merge_start) {
            const double u = (s - merge_start) / merge_len;
            blend = u * u * (3.0 - 2.0 * u);  // smoothstep
        }
        const Vec2 a = left_lane.point_at(s);
        const Vec2 b = ego_lane.point_at(s);
        path.push_back(a + (b - a) * blend);
    }
    PathTrack merging;
    merging.path = geom::Polyline(path);
    merging.start_s = 6.0 + unif(rng) * 8.0;
    merging.speed = 9.0 + unif(rng) * 2.0;
    merging.slow_after_s = merge_start + merge_len;
    merging.slow_speed = 3.5 + unif(rng) * 1.5;
    d.ado_paths.push_back(merging);
    d.init_speed = 7.0;
    return d;
}

}  // namespace

const char* kind_name(SceneKind k) { return kKindNames[static_cast<int>(k)]; }

SceneKind kind_from_name(const std::string& name) {
    for (int i = 0; i < 5; ++i) {
        if (name == kKindNames[i]) {
            return static_cast<SceneKind>(i);
        }
    }
    throw SchemaError("unknown scene kind: " + name);
}

ctrl::Control expert_control(const ctrl::EgoState& ego, const Scene& scene, int t,
                             const ExpertConfig& cfg) {
    const geom::Polyline& route = scene.route;
    const double s = route.project(ego.position);
    const double target_s = std::min(s + cfg.lookahead, route.length());
    const Vec2 target = route.point_at(target_s);
    const double yaw = ego.yaw();

    double v_target = cfg.cruise_speed;

    // Slow into upcoming curvature.
    const double probe = 10.0;
    const double dtheta = std::abs(geom::wrap_angle(route.tangent_at(std::min(s + probe, route.length())) -
                                                    route.tangent_at(s)));
    const double kappa = dtheta / probe;
    if (kappa > 1e-4) {
        v_target = std::min(v_target, std::sqrt(cfg.lateral_accel / kappa));
    }

    // Slow for traffic ahead.
    const Vec2 h = geom::heading_vec(yaw);
    for (const AdoTrack& ado : scene.ados) {
        const auto& pose = ado.poses[static_cast<std::size_t>(std::min(t, scene.steps - 1))];
        const Vec2 rel = Vec2{pose[0], pose[1]} - ego.position;
        const double dist = rel.norm();
        if (dist > cfg.caution_range) {
            continue;
        }
        const double bearing = std::abs(geom::wrap_angle(std::atan2(rel.y, rel.x) - yaw));
        if (bearing > 1.15) {
            continue;
        }
        v_target = std::min(v_target, dist < cfg.crawl_range ? cfg.crawl_speed : cfg.caution_speed);
    }

    // Slow when the heading ray runs into a boundary.
    for (double probe_s = 2.0; probe_s <= cfg.crawl_range; probe_s += 2.0) {
        const Vec2 p = ego.position + h * probe_s;
        for (const geom::Polyline& b : scene.map.boundaries) {
            if (b.distance(p) < 0.35) {
                v_target = std::min(v_target, cfg.crawl_speed);
            }
        }
    }

    ctrl::Control u;
    const double dv = std::clamp(v_target - ego.speed, -cfg.decel_limit * scene.dt,
                                 cfg.accel_limit * scene.dt);
    u.v = std::max(0.0, ego.speed + dv);

    // Pure pursuit on the lookahead point.
    const Vec2 rel = target - ego.position;
    const double bearing = geom::wrap_angle(std::atan2(rel.y, rel.x) - yaw);
    const double ld = std::max(rel.norm(), 1.0);
    const double curvature = 2.0 * std::sin(bearing) / ld;
    u.omega = std::clamp(u.v * curvature, -cfg.omega_max, cfg.omega_max);
    return u;
}

Scene generate_scene(SceneKind kind, std::uint64_t seed) {
    std::mt19937_64 rng(seed * 2654435761u + static_cast<std::uint64_t>(kind) + 1u);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    SceneDraft draft;
    switch (kind) {
        case SceneKind::straight: draft = draft_straight(rng); break;
        case SceneKind::curve: draft = draft_curve(rng); break;
        case SceneKind::intersection: draft = draft_intersection(rng); break;
        case SceneKind::roundabout: draft = draft_roundabout(rng); break;
        case SceneKind::cut_in: draft = draft_cut_in(rng); break;
    }

    Scene scene;
    scene.kind = kind;
    scene.seed = seed;
    char idbuf[64];
    std::snprintf(idbuf, sizeof(idbuf), "%s-%06llu", kind_name(kind),
                  static_cast<unsigned long long>(seed));
    scene.id = idbuf;
    scene.map = std::move(draft.map);
    scene.route = std::move(draft.route);

    for (const PathTrack& track : draft.ado_paths) {
        scene.ados.push_back(sample_track(track, scene.steps, scene.dt));
    }

    // Ego starts on the route with small lateral and heading jitter.
    const double jitter_lat = (unif(rng) * 2.0 - 1.0) * 0.3;
    const double jitter_yaw = (unif(rng) * 2.0 - 1.0) * 0.04;
    const double yaw0 = scene.route.tangent_at(0.0) + jitter_yaw;
    const Vec2 start = scene.route.point_at(0.0);
    const Vec2 left{-std::sin(yaw0), std::cos(yaw0)};
    scene.ego_init = ctrl::EgoState::make(start.x + left.x * jitter_lat,
                                          start.y + left.y * jitter_lat, yaw0,
                                          draft.init_speed, 0.0);

    // Scripted demonstration, closed loop.
    ExpertConfig expert_cfg;
    ctrl::EgoState ego = scene.ego_init;
    for (int t = 0; t < scene.steps; ++t) {
        DemoStep step;
        step.state = ego;
        step.control = expert_control(ego, scene, t, expert_cfg);
        scene.expert.push_back(step);
        ego = step_ego(ego, step.control, scene.dt);
    }
    scene.expert_final = ego;

    // Goal: the route point at the expert's final progress.
    const double s_f = scene.route.project(ego.position);
    scene.goal.position = scene.route.point_at(s_f);
    scene.goal.yaw = scene.route.tangent_at(s_f);

    if ((ego.position - scene.goal.position).norm() > 2.0) {
        throw NumericError("scene generation: expert strayed more than 2 m from the route (" +
                           scene.id + ")");
    }
    if (kind == SceneKind::cut_in) {
        std::vector<Vec2> expert_path;
        for (const DemoStep& stp : scene.expert) {
            expert_path.push_back(stp.state.position);
        }
        const geom::Polyline expert_line(expert_path);
        double closest = 1e9;
        for (const AdoTrack& ado : scene.ados) {
            for (const auto& pose : ado.poses) {
                closest = std::min(closest, expert_line.distance({pose[0], pose[1]}));
            }
        }
        if (closest > 6.0) {
            throw NumericError("cut_in generation: no ado passes within 6 m of the expert path");
        }
    }
    return scene;
}

namespace {

json vec2_json(const Vec2& v) { return json::array({v.x, v.y}); }

json pts_json(const std::vector<Vec2>& pts) {
    json arr = json::array();
    for (const Vec2& p : pts) {
        arr.push_back(vec2_json(p));
    }
    return arr;
}

std::vector<Vec2> pts_from_json(const json& arr) {
    std::vector<Vec2> pts;
    for (const auto& p : arr) {
        pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
    }
    return pts;
}

json ego_json(const ctrl::EgoState& e) {
    return json{{"x", e.position.x},
                {"y", e.position.y},
                {"yaw", e.yaw()},
                {"speed", e.speed},
                {"yaw_rate", e.yaw_rate}};
}

ctrl::EgoState ego_from_json(const json& j) {
    return ctrl::EgoState::make(j.at("x").get<double>(), j.at("y").get<double>(),
                                j.at("yaw").get<double>(), j.at("speed").get<double>(),
                                j.at("yaw_rate").get<double>());
}

}  // namespace

void save_scene(const Scene& scene, const std::filesystem::path& path) {
    json j;
    j["schema"] = "vagn-scene-v1";
    j["id"] = scene.id;
    j["kind"] = kind_name(scene.kind);
    j["seed"] = scene.seed;
    j["dt"] = scene.dt;
    j["steps"] = scene.steps;
    j["raster"] = {{"size", scene.raster.size},
                   {"channels", scene.raster.channels},
                   {"resolution", scene.raster.resolution}};
    json drivable = json::array();
    for (const auto& poly : scene.map.drivable) {
        drivable.push_back(pts_json(poly));
    }
    json holes = json::array();
    for (const auto& poly : scene.map.holes) {
        holes.push_back(pts_json(poly));
    }
    json centerlines = json::array();
    for (const auto& line : scene.map.centerlines) {
        centerlines.push_back(pts_json(line.points()));
    }
    json boundaries = json::array();
    for (const auto& line : scene.map.boundaries) {
        boundaries.push_back(pts_json(line.points()));
    }
    j["map"] = {{"drivable", drivable},
                {"holes", holes},
                {"centerlines", centerlines},
                {"boundaries", boundaries}};
    j["route"] = pts_json(scene.route.points());
    json ados = json::array();
    for (const AdoTrack& ado : scene.ados) {
        json poses = json::array();
        for (const auto& p : ado.poses) {
            poses.push_back(json::array({p[0], p[1], p[2]}));
        }
        ados.push_back({{"poses", poses}});
    }
    j["ados"] = ados;
    j["ego_init"] = ego_json(scene.ego_init);
    j["goal"] = {{"x", scene.goal.position.x}, {"y", scene.goal.position.y}, {"yaw", scene.goal.yaw}};
    json expert = json::array();
    for (const DemoStep& step : scene.expert) {
        json e = ego_json(step.state);
        e["v_cmd"] = step.control.v;
        e["w_cmd"] = step.control.omega;
        expert.push_back(e);
    }
    j["expert"] = expert;
    j["expert_final"] = ego_json(scene.expert_final);

    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << j.dump(1, '\t') << "\n";
}

Scene load_scene(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open scene file " + path.string());
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw SchemaError("scene file " + path.string() + " is not valid JSON: " + e.what());
    }
    try {
        if (j.at("schema").get<std::string>() != "vagn-scene-v1") {
            throw SchemaError("scene file " + path.string() + " has unsupported schema");
        }
        Scene scene;
        scene.id = j.at("id").get<std::string>();
        scene.kind = kind_from_name(j.at("kind").get<std::string>());
        scene.seed = j.at("seed").get<std::uint64_t>();
        scene.dt = j.at("dt").get<double>();
        scene.steps = j.at("steps").get<int>();
        scene.raster.size = j.at("raster").at("size").get<int>();
        scene.raster.channels = j.at("raster").at("channels").get<int>();
        scene.raster.resolution = j.at("raster").at("resolution").get<double>();
        for (const auto& poly : j.at("map").at("drivable")) {
            scene.map.drivable.push_back(pts_from_json(poly));
        }
        for (const auto& poly : j.at("map").at("holes")) {
            scene.map.holes.push_back(pts_from_json(poly));
        }
        for (const auto& line : j.at("map").at("centerlines")) {
            scene.map.centerlines.emplace_back(pts_from_json(line));
        }
        for (const auto& line : j.at("map").at("boundaries")) {
            scene.map.boundaries.emplace_back(pts_from_json(line));
        }
        scene.route = geom::Polyline(pts_from_json(j.at("route")));
        for (const auto& ado : j.at("ados")) {
            AdoTrack track;
            for (const auto& p : ado.at("poses")) {
                track.poses.push_back({p.at(0).get<double>(), p.at(1).get<double>(),
                                       p.at(2).get<double>()});
            }
            if (static_cast<int>(track.poses.size()) != scene.steps) {
                throw SchemaError("ado track length != steps in " + path.string());
            }
            scene.ados.push_back(std::move(track));
        }
        scene.ego_init = ego_from_json(j.at("ego_init"));
        scene.goal.position = {j.at("goal").at("x").get<double>(), j.at("goal").at("y").get<double>()};
        scene.goal.yaw = j.at("goal").at("yaw").get<double>();
        for (const auto& e : j.at("expert")) {
            DemoStep step;
            step.state = ego_from_json(e);
            step.control.v = e.at("v_cmd").get<double>();
            step.control.omega = e.at("w_cmd").get<double>();
            scene.expert.push_back(step);
        }
        if (static_cast<int>(scene.expert.size()) != scene.steps) {
            throw SchemaError("expert demonstration length != steps in " + path.string());
        }
        scene.expert_final = ego_from_json(j.at("expert_final"));
        return scene;
    } catch (const json::exception& e) {
        throw SchemaError("scene file " + path.string() + " is missing fields: " + e.what());
    }
}

}  // namespace vagn::sim
