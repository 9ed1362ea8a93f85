#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vagn/controller.hpp"
#include "vagn/geometry.hpp"

namespace vagn::sim {

enum class SceneKind { straight, curve, intersection, roundabout, cut_in };

const char* kind_name(SceneKind k);
SceneKind kind_from_name(const std::string& name);

struct RasterSpec {
    int size = 64;
    int channels = 5;
    double resolution = 0.5;
};

struct AdoTrack {
    // x, y, yaw at each control step.
    std::vector<std::array<double, 3>> poses;
};

struct SceneMap {
    std::vector<geom::Polygon> drivable;
    std::vector<geom::Polygon> holes;  // subtracted from the drivable area
    std::vector<geom::Polyline> centerlines;
    std::vector<geom::Polyline> boundaries;
};

struct Pose {
    geom::Vec2 position;
    double yaw = 0.0;
};

struct DemoStep {
    ctrl::EgoState state;
    ctrl::Control control;
};

// Synthetic scenario: procedural map, replayed ado tracks, and a scripted
// expert demonstration, all at 2 Hz over 40 steps.
struct Scene {
    std::string id;
    SceneKind kind = SceneKind::straight;
    std::uint64_t seed = 0;
    RasterSpec raster;
    SceneMap map;
    geom::Polyline route;
    std::vector<AdoTrack> ados;
    ctrl::EgoState ego_init;
    Pose goal;
    std::vector<DemoStep> expert;  // exactly `steps` entries
    ctrl::EgoState expert_final;
    double dt = 0.5;
    int steps = 40;
};

// Deterministic per (kind, seed). The expert demonstration is produced by a
// pure-pursuit tracker with a rule-based speed governor; generation fails if
// the demonstration violates the scenario contract.
Scene generate_scene(SceneKind kind, std::uint64_t seed);

void save_scene(const Scene& scene, const std::filesystem::path& path);
Scene load_scene(const std::filesystem::path& path);

// Scripted demonstrator, also usable as an oracle policy in tests.
struct ExpertConfig {
    double lookahead = 6.0;
    double cruise_speed = 8.0;
    double caution_speed = 5.0;
    double crawl_speed = 3.0;
    double caution_range = 14.0;
    double crawl_range = 8.0;
    double lateral_accel = 2.0;
    double accel_limit = 1.5;   // m/s^2
    double decel_limit = 2.5;   // m/s^2
    double omega_max = 1.5;
};

ctrl::Control expert_control(const ctrl::EgoState& ego, const Scene& scene, int t,
                             const ExpertConfig& cfg);

}  // namespace vagn::sim
