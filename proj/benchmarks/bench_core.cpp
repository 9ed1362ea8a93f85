#include <benchmark/benchmark.h>

#include <random>

#include "vagn/controller.hpp"
#include "vagn/scene.hpp"
#include "vagn/simulator.hpp"
#include "vagn/trainer.hpp"

using namespace vagn;

namespace {

ad::Tensor random_raster(int channels, int size, std::mt19937_64& rng) {
    ad::Tensor t = ad::Tensor::zeros({channels, size, size});
    std::uniform_int_distribution<int> bit(0, 1);
    for (double& v : t.data) {
        v = bit(rng);
    }
    return t;
}

void BM_ControllerForward(benchmark::State& state) {
    ctrl::ControllerConfig cfg;
    ctrl::Policy policy(cfg, 1);
    std::mt19937_64 rng(3);
    const vision::BevRaster raster{random_raster(cfg.raster_channels, cfg.raster_size, rng),
                                   cfg.resolution};
    const geom::Polyline route({{-5.0, 0.0}, {200.0, 0.0}});
    const ctrl::EgoState ego = ctrl::EgoState::make(0.0, 0.2, 0.05, 6.0, 0.0);
    std::mt19937_64 qrng(1);
    const ad::Tensor q0 = autom::init_state(cfg.qstates, autom::QInit::uniform, qrng);
    for (auto _ : state) {
        benchmark::DoNotOptimize(policy.act(raster, ego, route, q0));
    }
}
BENCHMARK(BM_ControllerForward)->Unit(benchmark::kMillisecond);

void BM_TrainIteration(benchmark::State& state) {
    ctrl::ControllerConfig cfg;
    ctrl::Policy policy(cfg, 1);
    std::vector<sim::Scene> scenes{sim::generate_scene(sim::SceneKind::curve, 3)};
    train::TrainConfig tcfg;
    tcfg.minibatch = static_cast<int>(state.range(0));
    std::vector<train::Sample> batch;
    for (int i = 0; i < tcfg.minibatch; ++i) {
        batch.push_back({0, i % 40});
    }
    double loss = 0.0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(train::minibatch_gradient(policy, scenes, batch, tcfg, &loss));
    }
}
BENCHMARK(BM_TrainIteration)->Arg(1)->Arg(16)->Unit(benchmark::kMillisecond);

void BM_Rasterize(benchmark::State& state) {
    const sim::Scene scene = sim::generate_scene(sim::SceneKind::roundabout, 5);
    for (auto _ : state) {
        benchmark::DoNotOptimize(sim::rasterize(scene, scene.ego_init, 0, scene.raster));
    }
}
BENCHMARK(BM_Rasterize)->Unit(benchmark::kMicrosecond);

void BM_SceneGeneration(benchmark::State& state) {
    std::uint64_t seed = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            sim::generate_scene(sim::SceneKind::cut_in, ++seed));
    }
}
BENCHMARK(BM_SceneGeneration)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
