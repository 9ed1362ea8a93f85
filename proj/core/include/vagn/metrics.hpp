#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vagn/controller.hpp"
#include "vagn/scene.hpp"
#include "vagn/simulator.hpp"

namespace vagn::train {

struct MetricsRow {
    std::string scene_id;
    std::uint64_t seed = 0;
    double close_encounter_pct = 0.0;  // fraction of steps with an ado within the radius
    double max_accel = 0.0;            // m/s^2, |dv|/dt over the trace
    double ade = 0.0;                  // mean L2 to the demonstration, synchronized steps
    double goal_distance = 0.0;        // final distance to the scene goal
};

struct MetricsSummary {
    double close_encounter_mean = 0.0, close_encounter_std = 0.0;
    double max_accel_mean = 0.0, max_accel_std = 0.0;
    double ade_mean = 0.0, ade_std = 0.0;
    double goal_distance_mean = 0.0, goal_distance_std = 0.0;
};

MetricsRow compute_metrics(const sim::Scene& scene, const sim::RolloutTrace& trace,
                           double encounter_radius = 3.0);

// Rolls out every scene for every seed. Per-seed means are aggregated into
// mean +- std across seeds. `jobs` rollouts run in parallel.
struct EvalResult {
    std::vector<MetricsRow> rows;  // one per (scene, seed)
    MetricsSummary summary;
};

EvalResult evaluate(const ctrl::Policy& policy, const std::vector<sim::Scene>& scenes,
                    const std::vector<std::uint64_t>& seeds, int jobs = 1,
                    double encounter_radius = 3.0);

void write_metrics_csv(const std::filesystem::path& path, const EvalResult& result);

}  // namespace vagn::train
