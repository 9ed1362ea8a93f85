#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "vagn/checkpoint.hpp"
#include "vagn/errors.hpp"
#include "vagn/scene.hpp"
#include "vagn/simulator.hpp"

using namespace vagn;

namespace {
constexpr double kPi = std::numbers::pi;

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const std::vector<sim::SceneKind> kAllKinds{
    sim::SceneKind::straight, sim::SceneKind::curve, sim::SceneKind::intersection,
    sim::SceneKind::roundabout, sim::SceneKind::cut_in};
}  // namespace

TEST_CASE("step_ego") {
    SUBCASE("straight motion") {
        const ctrl::EgoState ego = ctrl::EgoState::make(0.0, 0.0, 0.0, 0.0, 0.0);
        const ctrl::EgoState next = sim::step_ego(ego, {1.0, 0.0}, 0.5);
        CHECK(next.position.x == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(next.position.y == doctest::Approx(0.0).epsilon(1e-15));
        CHECK(next.speed == 1.0);
    }
    SUBCASE("turn in place") {
        const ctrl::EgoState ego = ctrl::EgoState::make(2.0, 3.0, 0.2, 0.0, 0.0);
        const ctrl::EgoState next = sim::step_ego(ego, {0.0, 0.6}, 0.5);
        CHECK(next.position.x == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(next.position.y == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(next.yaw() == doctest::Approx(0.5).epsilon(1e-12));
    }
    SUBCASE("full circle returns to the start") {
        const double v = 5.0, omega = 0.5, dt = 0.5;
        const int steps = static_cast<int>(std::round(2.0 * kPi / omega / dt));
        ctrl::EgoState ego = ctrl::EgoState::make(1.0, -2.0, 0.7, v, omega);
        const geom::Vec2 start = ego.position;
        for (int i = 0; i < steps; ++i) {
            ego = sim::step_ego(ego, {v, omega}, dt);
        }
        CHECK((ego.position - start).norm() < 1e-6);
        CHECK(std::abs(geom::wrap_angle(ego.yaw() - 0.7)) < 1e-9);
    }
}

TEST_CASE("scene generation") {
    SUBCASE("deterministic per seed, bit-identical files") {
        const auto dir = std::filesystem::temp_directory_path() / "vagn_scene_det";
        std::filesystem::create_directories(dir);
        for (sim::SceneKind kind : kAllKinds) {
            const sim::Scene a = sim::generate_scene(kind, 7);
            const sim::Scene b = sim::generate_scene(kind, 7);
            sim::save_scene(a, dir / "a.json");
            sim::save_scene(b, dir / "b.json");
            CHECK(slurp(dir / "a.json") == slurp(dir / "b.json"));
            const sim::Scene c = sim::generate_scene(kind, 8);
            sim::save_scene(c, dir / "c.json");
            CHECK(slurp(dir / "a.json") != slurp(dir / "c.json"));
        }
    }
    SUBCASE("contract: 40 steps, route near ego, expert reaches the goal") {
        for (sim::SceneKind kind : kAllKinds) {
            for (std::uint64_t seed = 1; seed <= 6; ++seed) {
                const sim::Scene scene = sim::generate_scene(kind, seed);
                CHECK(scene.steps == 40);
                CHECK(static_cast<int>(scene.expert.size()) == 40);
                for (const sim::AdoTrack& ado : scene.ados) {
                    CHECK(static_cast<int>(ado.poses.size()) == 40);
                }
                CHECK((scene.route.point_at(0.0) - scene.ego_init.position).norm() < 2.0);
                CHECK((scene.expert_final.position - scene.goal.position).norm() < 2.0);
            }
        }
    }
    SUBCASE("cut_in: an ado passes within 6 m of the expert path") {
        for (std::uint64_t seed = 1; seed <= 6; ++seed) {
            const sim::Scene scene = sim::generate_scene(sim::SceneKind::cut_in, seed);
            std::vector<geom::Vec2> pts;
            for (const auto& step : scene.expert) {
                pts.push_back(step.state.position);
            }
            const geom::Polyline path(pts);
            double closest = 1e9;
            for (const auto& ado : scene.ados) {
                for (const auto& pose : ado.poses) {
                    closest = std::min(closest, path.distance({pose[0], pose[1]}));
                }
            }
            CHECK(closest < 6.0);
        }
    }
    SUBCASE("expert controls replayed open loop reproduce the stored states") {
        for (sim::SceneKind kind : kAllKinds) {
            const sim::Scene scene = sim::generate_scene(kind, 3);
            ctrl::EgoState ego = scene.ego_init;
            for (int t = 0; t < scene.steps; ++t) {
                const auto& demo = scene.expert[static_cast<std::size_t>(t)];
                CHECK((ego.position - demo.state.position).norm() < 1e-9);
                CHECK(std::abs(geom::wrap_angle(ego.yaw() - demo.state.yaw())) < 1e-9);
                ego = sim::step_ego(ego, demo.control, scene.dt);
            }
            CHECK((ego.position - scene.expert_final.position).norm() < 1e-9);
        }
    }
    SUBCASE("json round trip preserves the scene") {
        const auto dir = std::filesystem::temp_directory_path() / "vagn_scene_rt";
        std::filesystem::create_directories(dir);
        const sim::Scene scene = sim::generate_scene(sim::SceneKind::roundabout, 11);
        sim::save_scene(scene, dir / "s.json");
        const sim::Scene loaded = sim::load_scene(dir / "s.json");
        CHECK(loaded.id == scene.id);
        CHECK(loaded.expert.size() == scene.expert.size());
        CHECK((loaded.goal.position - scene.goal.position).norm() < 1e-12);
        CHECK(loaded.route.length() == doctest::Approx(scene.route.length()).epsilon(1e-12));
        // Saving the loaded copy reproduces the file byte for byte.
        sim::save_scene(loaded, dir / "s2.json");
        CHECK(slurp(dir / "s.json") == slurp(dir / "s2.json"));
    }
    SUBCASE("missing file raises IoError") {
        CHECK_THROWS_AS(sim::load_scene("/nonexistent/file.json"), vagn::IoError);
    }
}

TEST_CASE("rasterization") {
    const sim::Scene scene = sim::generate_scene(sim::SceneKind::straight, 5);
    const sim::RasterSpec spec = scene.raster;
    const int hw = spec.size * spec.size;

    SUBCASE("ego footprint sits at the image center") {
        for (int t : {0, 10, 39}) {
            const ctrl::EgoState& ego = scene.expert[static_cast<std::size_t>(t)].state;
            const vision::BevRaster raster = sim::rasterize(scene, ego, t, spec);
            const int mid = spec.size / 2;
            const double* ego_ch = raster.channels.data.data() + 4 * hw;
            CHECK(ego_ch[(mid - 1) * spec.size + mid - 1] == 1.0);
            CHECK(ego_ch[mid * spec.size + mid] == 1.0);
            // Footprint is a compact blob: ~ (4.5/res) x (2/res) pixels.
            double total = 0.0;
            for (int i = 0; i < hw; ++i) {
                total += ego_ch[i];
            }
            const double expect = (4.5 / spec.resolution) * (2.0 / spec.resolution);
            CHECK(total > 0.5 * expect);
            CHECK(total < 2.0 * expect);
        }
    }
    SUBCASE("binary values everywhere") {
        const vision::BevRaster raster = sim::rasterize(scene, scene.ego_init, 0, spec);
        for (double v : raster.channels.data) {
            CHECK((v == 0.0 || v == 1.0));
        }
    }
    SUBCASE("scene without ados leaves the ado channel empty") {
        sim::Scene bare = scene;
        bare.ados.clear();
        const vision::BevRaster raster = sim::rasterize(bare, bare.ego_init, 0, spec);
        const double* ado_ch = raster.channels.data.data() + 3 * hw;
        for (int i = 0; i < hw; ++i) {
            CHECK(ado_ch[i] == 0.0);
        }
    }
    SUBCASE("rotating the ego by 90 degrees rotates the raster within 1 px") {
        const ctrl::EgoState ego = scene.expert[8].state;
        ctrl::EgoState rotated = ego;
        rotated.heading = quat::yaw_to_quat(geom::wrap_angle(ego.yaw() + kPi / 2.0));
        const vision::BevRaster a = sim::rasterize(scene, ego, 8, spec);
        const vision::BevRaster b = sim::rasterize(scene, rotated, 8, spec);
        // Rotating the ego +90deg rotates the world content -90deg in image
        // space: pixel (r,c) in a ends up at (c, S-1-r) in b.
        const int s = spec.size;
        // Compare the boundary channel, allowing 1 px of rasterization slack.
        auto at = [&](const vision::BevRaster& img, int ch, int r, int c) {
            if (r < 0 || r >= s || c < 0 || c >= s) {
                return 0.0;
            }
            return img.channels.data[static_cast<std::size_t>(ch * hw + r * s + c)];
        };
        int mismatches = 0;
        int on_pixels = 0;
        for (int r = 0; r < s; ++r) {
            for (int c = 0; c < s; ++c) {
                if (at(a, 2, r, c) != 1.0) {
                    continue;
                }
                ++on_pixels;
                const int rr = c, cc = s - 1 - r;
                bool hit = false;
                for (int dr = -1; dr <= 1 && !hit; ++dr) {
                    for (int dc = -1; dc <= 1 && !hit; ++dc) {
                        hit = at(b, 2, rr + dr, cc + dc) == 1.0;
                    }
                }
                mismatches += hit ? 0 : 1;
            }
        }
        REQUIRE(on_pixels > 20);
        CHECK(mismatches == 0);
    }
    SUBCASE("idempotent and side-effect free") {
        const vision::BevRaster a = sim::rasterize(scene, scene.ego_init, 3, spec);
        const vision::BevRaster b = sim::rasterize(scene, scene.ego_init, 3, spec);
        CHECK(a.channels.data == b.channels.data);
    }
    SUBCASE("step index is validated") {
        CHECK_THROWS_AS(sim::rasterize(scene, scene.ego_init, 40, spec), vagn::SchemaError);
    }
}

TEST_CASE("rollout") {
    const sim::Scene scene = sim::generate_scene(sim::SceneKind::curve, 9);

    SUBCASE("untrained policy yields a finite 40-step trace") {
        ctrl::ControllerConfig cfg;
        ctrl::Policy policy(cfg, 1);
        const sim::RolloutTrace trace = sim::rollout(scene, policy, 0);
        CHECK(static_cast<int>(trace.steps.size()) == 40);
        for (const sim::TraceStep& step : trace.steps) {
            CHECK(std::isfinite(step.state.position.x));
            CHECK(std::isfinite(step.control.v));
            CHECK(autom::on_simplex(step.q, 1e-6));
        }
    }
    SUBCASE("identical seed and checkpoint give bit-identical traces") {
        ctrl::ControllerConfig cfg;
        ctrl::Policy policy(cfg, 2);
        const sim::RolloutTrace t1 = sim::rollout(scene, policy, 4);
        const sim::RolloutTrace t2 = sim::rollout(scene, policy, 4);
        REQUIRE(t1.steps.size() == t2.steps.size());
        for (std::size_t i = 0; i < t1.steps.size(); ++i) {
            CHECK(t1.steps[i].state.position.x == t2.steps[i].state.position.x);
            CHECK(t1.steps[i].control.v == t2.steps[i].control.v);
            CHECK(t1.steps[i].q.data == t2.steps[i].q.data);
        }
    }
    SUBCASE("raster config mismatch is rejected") {
        ctrl::ControllerConfig cfg;
        cfg.raster_size = 32;
        ctrl::Policy policy(cfg, 3);
        CHECK_THROWS_AS(sim::rollout(scene, policy, 0), vagn::SchemaError);
    }
    SUBCASE("trace csv has one row per step") {
        ctrl::ControllerConfig cfg;
        ctrl::Policy policy(cfg, 4);
        const sim::RolloutTrace trace = sim::rollout(scene, policy, 0);
        const auto dir = std::filesystem::temp_directory_path() / "vagn_trace";
        std::filesystem::create_directories(dir);
        sim::save_trace_csv(trace, dir / "t.csv");
        std::ifstream in(dir / "t.csv");
        std::string line;
        int rows = 0;
        while (std::getline(in, line)) {
            ++rows;
        }
        CHECK(rows == 41);  // header + 40 steps
    }
}
