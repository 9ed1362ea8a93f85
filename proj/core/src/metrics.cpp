#include "vagn/metrics.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <thread>

#include "vagn/errors.hpp"

namespace vagn::train {

MetricsRow compute_metrics(const sim::Scene& scene, const sim::RolloutTrace& trace,
                           double encounter_radius) {
    if (static_cast<int>(trace.steps.size()) != scene.steps) {
        throw SchemaError("compute_metrics: trace length does not match the scene horizon");
    }
    MetricsRow row;
    row.scene_id = scene.id;
    row.seed = trace.seed;

    int encounters = 0;
    for (int t = 0; t < scene.steps; ++t) {
        const geom::Vec2 pos = trace.steps[static_cast<std::size_t>(t)].state.position;
        for (const sim::AdoTrack& ado : scene.ados) {
            const auto& pose = ado.poses[static_cast<std::size_t>(t)];
            if ((pos - geom::Vec2{pose[0], pose[1]}).norm() < encounter_radius) {
                ++encounters;
                break;
            }
        }
    }
    row.close_encounter_pct = static_cast<double>(encounters) / scene.steps;

    double prev_v = trace.steps.front().state.speed;
    double max_accel = 0.0;
    for (const sim::TraceStep& step : trace.steps) {
        max_accel = std::max(max_accel, std::abs(step.control.v - prev_v) / scene.dt);
        prev_v = step.control.v;
    }
    row.max_accel = max_accel;

    double ade = 0.0;
    for (int t = 1; t < scene.steps; ++t) {
        ade += (trace.steps[static_cast<std::size_t>(t)].state.position -
                scene.expert[static_cast<std::size_t>(t)].state.position)
                   .norm();
    }
    ade += (trace.final_state.position - scene.expert_final.position).norm();
    row.ade = ade / scene.steps;

    row.goal_distance = (trace.final_state.position - scene.goal.position).norm();
    return row;
}

EvalResult evaluate(const ctrl::Policy& policy, const std::vector<sim::Scene>& scenes,
                    const std::vector<std::uint64_t>& seeds, int jobs,
                    double encounter_radius) {
    if (scenes.empty() || seeds.empty()) {
        throw SchemaError("evaluate: need at least one scene and one seed");
    }
    struct Task {
        int scene;
        int seed_idx;
    };
    std::vector<Task> tasks;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
        for (std::size_t sc = 0; sc < scenes.size(); ++sc) {
            tasks.push_back(Task{static_cast<int>(sc), static_cast<int>(si)});
        }
    }
    EvalResult result;
    result.rows.resize(tasks.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= tasks.size()) {
                return;
            }
            const Task& task = tasks[i];
            const sim::Scene& scene = scenes[static_cast<std::size_t>(task.scene)];
            const sim::RolloutTrace trace =
                sim::rollout(scene, policy, seeds[static_cast<std::size_t>(task.seed_idx)]);
            result.rows[i] = compute_metrics(scene, trace, encounter_radius);
        }
    };
    const int nthreads = std::max(1, std::min<int>(jobs, static_cast<int>(tasks.size())));
    if (nthreads == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(nthreads));
        for (int i = 0; i < nthreads; ++i) {
            pool.emplace_back(worker);
        }
        for (std::thread& th : pool) {
            th.join();
        }
    }

    // Per-seed means, then mean +- std across seeds (population std).
    const std::size_t per_seed = scenes.size();
    std::vector<std::array<double, 4>> seed_means;
    for (std::size_t si = 0; si < seeds.size(); ++si) {
        std::array<double, 4> acc{0.0, 0.0, 0.0, 0.0};
        for (std::size_t sc = 0; sc < per_seed; ++sc) {
            const MetricsRow& r = result.rows[si * per_seed + sc];
            acc[0] += r.close_encounter_pct;
            acc[1] += r.max_accel;
            acc[2] += r.ade;
            acc[3] += r.goal_distance;
        }
        for (double& v : acc) {
            v /= static_cast<double>(per_seed);
        }
        seed_means.push_back(acc);
    }
    auto mean_std = [&](int k, double& mean, double& stddev) {
        double m = 0.0;
        for (const auto& s : seed_means) {
            m += s[static_cast<std::size_t>(k)];
        }
        m /= static_cast<double>(seed_means.size());
        double var = 0.0;
        for (const auto& s : seed_means) {
            const double d = s[static_cast<std::size_t>(k)] - m;
            var += d * d;
        }
        mean = m;
        stddev = std::sqrt(var / static_cast<double>(seed_means.size()));
    };
    mean_std(0, result.summary.close_encounter_mean, result.summary.close_encounter_std);
    mean_std(1, result.summary.max_accel_mean, result.summary.max_accel_std);
    mean_std(2, result.summary.ade_mean, result.summary.ade_std);
    mean_std(3, result.summary.goal_distance_mean, result.summary.goal_distance_std);
    return result;
}

void write_metrics_csv(const std::filesystem::path& path, const EvalResult& result) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << "scene_id,seed,close_encounter_pct,max_accel,ade,goal_distance\n";
    char buf[256];
    for (const MetricsRow& r : result.rows) {
        std::snprintf(buf, sizeof(buf), "%s,%llu,%.17g,%.17g,%.17g,%.17g\n", r.scene_id.c_str(),
                      static_cast<unsigned long long>(r.seed), r.close_encounter_pct, r.max_accel,
                      r.ade, r.goal_distance);
        out << buf;
    }
    const MetricsSummary& s = result.summary;
    std::snprintf(buf, sizeof(buf),
                  "aggregate,mean_std,%.17g +- %.17g,%.17g +- %.17g,%.17g +- %.17g,%.17g +- %.17g\n",
                  s.close_encounter_mean, s.close_encounter_std, s.max_accel_mean, s.max_accel_std,
                  s.ade_mean, s.ade_std, s.goal_distance_mean, s.goal_distance_std);
    out << buf;
}

}  // namespace vagn::train
