#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "vagn/metrics.hpp"
#include "vagn/trainer.hpp"

namespace vagn::train {

// One train+evaluate grid cell.
struct SweepCell {
    std::string label;
    ctrl::ControllerConfig model;
    TrainConfig training;
};

struct SweepRow {
    std::string label;
    std::uint64_t seed = 0;
    std::int64_t param_count = 0;
    double close_encounter_pct = 0.0;
    double max_accel = 0.0;
    double ade = 0.0;
    double goal_distance = 0.0;
    double final_loss = 0.0;
};

// Trains and evaluates every cell; cells run in parallel across `jobs`
// threads, each cell sequential inside. Metrics are means over the
// validation scenes.
std::vector<SweepRow> run_sweep(const std::vector<SweepCell>& cells,
                                const std::vector<sim::Scene>& train_scenes,
                                const std::vector<sim::Scene>& val_scenes, int jobs);

std::vector<SweepCell> sample_efficiency_cells(const ctrl::ControllerConfig& base,
                                               const TrainConfig& training,
                                               const std::vector<double>& fractions,
                                               const std::vector<std::uint64_t>& seeds);

std::vector<SweepCell> qstate_cells(const ctrl::ControllerConfig& base,
                                    const TrainConfig& training, const std::vector<int>& qstates,
                                    const std::vector<std::uint64_t>& seeds);

std::vector<SweepCell> ablation_cells(const ctrl::ControllerConfig& base,
                                      const TrainConfig& training,
                                      const std::vector<std::uint64_t>& seeds);

void write_sweep_csv(const std::filesystem::path& path, const std::vector<SweepRow>& rows);

}  // namespace vagn::train
