#pragma once

#include <filesystem>
#include <vector>

#include "vagn/controller.hpp"
#include "vagn/perception.hpp"
#include "vagn/scene.hpp"

namespace vagn::sim {

// Ego-centric semantic raster of the scene at control step t, heading up,
// binary channels {drivable, centerlines, boundaries, ados, ego}.
vision::BevRaster rasterize(const Scene& scene, const ctrl::EgoState& ego, int t,
                            const RasterSpec& spec);

// Unicycle kinematics at velocity-level control, integrated along the exact
// circular arc of the commanded (v, omega).
ctrl::EgoState step_ego(const ctrl::EgoState& ego, const ctrl::Control& u, double dt);

struct TraceStep {
    ctrl::EgoState state;  // before the control is applied
    ctrl::Control control;
    ad::Tensor q;          // automaton distribution after this step
    ad::Tensor pv;
    dmp::DmpParams params;
};

struct RolloutTrace {
    std::string scene_id;
    std::uint64_t seed = 0;
    std::vector<TraceStep> steps;
    ctrl::EgoState final_state;
};

// Synchronous closed-loop rollout: uniform automaton init, then at each step
// rasterize -> policy -> step_ego, with ados replaying their stored tracks.
RolloutTrace rollout(const Scene& scene, const ctrl::Policy& policy, std::uint64_t seed);

// Rollout of an arbitrary controller (used for the scripted expert and
// degenerate policies in tests). `controller(ego, t)` returns the command.
template <typename F>
RolloutTrace rollout_with(const Scene& scene, F&& controller) {
    RolloutTrace trace;
    trace.scene_id = scene.id;
    ctrl::EgoState ego = scene.ego_init;
    for (int t = 0; t < scene.steps; ++t) {
        TraceStep step;
        step.state = ego;
        step.control = controller(ego, t);
        trace.steps.push_back(step);
        ego = step_ego(ego, step.control, scene.dt);
    }
    trace.final_state = ego;
    return trace;
}

void save_trace_csv(const RolloutTrace& trace, const std::filesystem::path& path);

}  // namespace vagn::sim
