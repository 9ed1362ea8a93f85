#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "vagn/automaton.hpp"
#include "vagn/controller.hpp"
#include "vagn/scene.hpp"

namespace vagn::train {

struct TrainConfig {
    int iterations = 5000;
    int minibatch = 16;
    double lr = 1e-3;
    bool sgd = false;  // plain gradient descent instead of Adam
    autom::QInit q_init = autom::QInit::uniform;
    int unroll = 1;
    double fraction = 1.0;  // fraction of training scenes used
    std::uint64_t seed = 1;
    int log_every = 50;
};

struct TrainResult {
    std::vector<double> loss_curve;  // one entry per iteration
    double initial_loss = 0.0;
    double final_loss = 0.0;
};

// One teacher-forced training sample: the demonstration state at (scene, t)
// plus the expert command to imitate.
struct Sample {
    int scene = 0;
    int t = 0;
};

// Behavior cloning: minibatch MSE between predicted and demonstrated
// (v, omega), states teacher-forced from the demonstrations, automaton state
// freshly initialized per window. Throws NumericError if the loss diverges.
TrainResult fit(ctrl::Policy& policy, const std::vector<sim::Scene>& scenes,
                const TrainConfig& cfg,
                const std::function<void(int, double)>& on_iteration = nullptr);

// Mean loss over every (scene, t) sample without updating the parameters.
double dataset_loss(const ctrl::Policy& policy, const std::vector<sim::Scene>& scenes,
                    const TrainConfig& cfg);

// Gradient of the minibatch loss in ParamSet order (used by tests).
std::vector<ad::Tensor> minibatch_gradient(const ctrl::Policy& policy,
                                           const std::vector<sim::Scene>& scenes,
                                           const std::vector<Sample>& batch,
                                           const TrainConfig& cfg, double* loss_out);

void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& curve);

// Deterministic seeded subset of scene indices for a data fraction.
std::vector<int> fraction_subset(int scene_count, double fraction, std::uint64_t seed);

}  // namespace vagn::train
