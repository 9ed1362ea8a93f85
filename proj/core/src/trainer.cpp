#include "vagn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <random>

#include "vagn/errors.hpp"
#include "vagn/optimizer.hpp"
#include "vagn/simulator.hpp"

namespace vagn::train {

namespace {

ctrl::StepInputs demo_inputs(const ctrl::Policy& policy, const sim::Scene& scene, int t) {
    const ctrl::EgoState& ego = scene.expert[static_cast<std::size_t>(t)].state;
    const vision::BevRaster raster = sim::rasterize(scene, ego, t, scene.raster);
    return policy.make_step_inputs(raster, ego, scene.route);
}

// q-init seed for a (training seed, iteration, slot) triple.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t iter, std::uint64_t slot) {
    std::uint64_t h = seed ^ (iter * 0x9e3779b97f4a7c15ull) ^ (slot * 0xbf58476d1ce4e5b9ull);
    h ^= h >> 31;
    h *= 0x94d049bb133111ebull;
    h ^= h >> 29;
    return h;
}

struct BatchGraph {
    ad::Tensor pred;
    ad::Tensor target;
    std::vector<ad::Tensor> penalties;
};

BatchGraph build_batch(ad::Tape& tape, const ctrl::Policy& policy,
                       const ctrl::Policy::Bound& bound, const std::vector<sim::Scene>& scenes,
                       const std::vector<Sample>& batch, const TrainConfig& cfg,
                       std::uint64_t iter) {
    const int unroll = std::max(1, cfg.unroll);
    BatchGraph g;
    std::vector<ad::Tensor> preds;
    std::vector<double> targets;
    for (std::size_t s = 0; s < batch.size(); ++s) {
        const Sample& sample = batch[s];
        const sim::Scene& scene = scenes[static_cast<std::size_t>(sample.scene)];
        std::mt19937_64 qrng(mix_seed(cfg.seed, iter, s));
        ad::Tensor q = autom::init_state(policy.config().qstates, cfg.q_init, qrng);
        for (int k = 0; k < unroll; ++k) {
            const int t = sample.t + k;
            const ctrl::StepInputs in = demo_inputs(policy, scene, t);
            const ctrl::Policy::TapeOutput out = policy.forward_on_tape(tape, bound, in, q);
            q = out.q_next;
            preds.push_back(out.v);
            preds.push_back(out.omega);
            const ctrl::Control& demo = scene.expert[static_cast<std::size_t>(t)].control;
            targets.push_back(demo.v);
            targets.push_back(demo.omega);
            if (!out.zeta_penalty.empty()) {
                g.penalties.push_back(out.zeta_penalty);
            }
        }
    }
    g.pred = tape.concat(preds);
    g.target = ad::Tensor::vector(std::move(targets));
    return g;
}

ad::Tensor batch_loss(ad::Tape& tape, BatchGraph& g, std::size_t batch_size) {
    ad::Tensor loss = tape.mse_loss(g.pred, g.target);
    if (!g.penalties.empty()) {
        ad::Tensor pen = g.penalties.front();
        for (std::size_t i = 1; i < g.penalties.size(); ++i) {
            pen = tape.add(pen, g.penalties[i]);
        }
        loss = tape.add(loss, tape.scale(pen, 1.0 / static_cast<double>(batch_size)));
    }
    return loss;
}

}  // namespace

std::vector<int> fraction_subset(int scene_count, double fraction, std::uint64_t seed) {
    if (!(fraction > 0.0 && fraction <= 1.0)) {
        throw SchemaError("data fraction must be in (0, 1]");
    }
    std::vector<int> order(static_cast<std::size_t>(scene_count));
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(seed ^ 0xd1b54a32d192ed03ull);
    std::shuffle(order.begin(), order.end(), rng);
    const int keep = std::max(1, static_cast<int>(std::lround(fraction * scene_count)));
    order.resize(static_cast<std::size_t>(std::min(keep, scene_count)));
    std::sort(order.begin(), order.end());
    return order;
}

std::vector<ad::Tensor> minibatch_gradient(const ctrl::Policy& policy,
                                           const std::vector<sim::Scene>& scenes,
                                           const std::vector<Sample>& batch,
                                           const TrainConfig& cfg, double* loss_out) {
    ad::Tape tape;
    const ctrl::Policy::Bound bound = policy.bind(tape);
    BatchGraph g = build_batch(tape, policy, bound, scenes, batch, cfg, /*iter=*/0);
    const ad::Tensor loss = batch_loss(tape, g, batch.size());
    tape.backward(loss);
    if (loss_out) {
        *loss_out = loss.item();
    }
    std::vector<ad::Tensor> grads;
    grads.reserve(bound.all.size());
    for (const ad::Tensor& p : bound.all) {
        grads.push_back(tape.grad(p));
    }
    return grads;
}

TrainResult fit(ctrl::Policy& policy, const std::vector<sim::Scene>& scenes,
                const TrainConfig& cfg, const std::function<void(int, double)>& on_iteration) {
    if (scenes.empty()) {
        throw SchemaError("training requires a nonempty dataset");
    }
    const int unroll = std::max(1, cfg.unroll);
    const std::vector<int> subset = fraction_subset(static_cast<int>(scenes.size()),
                                                    cfg.fraction, cfg.seed);
    std::vector<Sample> samples;
    for (int scene_idx : subset) {
        const sim::Scene& scene = scenes[static_cast<std::size_t>(scene_idx)];
        for (int t = 0; t + unroll <= scene.steps; ++t) {
            samples.push_back(Sample{scene_idx, t});
        }
    }
    if (samples.empty()) {
        throw SchemaError("training subset has no usable samples");
    }

    ad::OptimizerConfig ocfg;
    ocfg.mode = cfg.sgd ? ad::OptimizerConfig::Mode::sgd : ad::OptimizerConfig::Mode::adam;
    ocfg.lr = cfg.lr;
    ad::Optimizer opt(ocfg);

    TrainResult result;
    result.initial_loss = dataset_loss(policy, scenes, cfg);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_int_distribution<std::size_t> pick(0, samples.size() - 1);

    for (int iter = 0; iter < cfg.iterations; ++iter) {
        std::vector<Sample> batch;
        batch.reserve(static_cast<std::size_t>(cfg.minibatch));
        for (int b = 0; b < cfg.minibatch; ++b) {
            batch.push_back(samples[pick(rng)]);
        }
        ad::Tape tape;
        const ctrl::Policy::Bound bound = policy.bind(tape);
        BatchGraph g = build_batch(tape, policy, bound, scenes, batch, cfg,
                                   static_cast<std::uint64_t>(iter));
        const ad::Tensor loss = batch_loss(tape, g, batch.size());
        const double loss_value = loss.item();
        if (!std::isfinite(loss_value)) {
            throw NumericError("training diverged: loss is not finite at iteration " +
                               std::to_string(iter));
        }
        tape.backward(loss);
        std::vector<ad::Tensor> grads;
        grads.reserve(bound.all.size());
        for (const ad::Tensor& p : bound.all) {
            grads.push_back(tape.grad(p));
        }
        opt.step(policy.params(), grads);
        result.loss_curve.push_back(loss_value);
        if (on_iteration && (iter % std::max(1, cfg.log_every) == 0 || iter + 1 == cfg.iterations)) {
            on_iteration(iter, loss_value);
        }
    }
    result.final_loss = dataset_loss(policy, scenes, cfg);
    return result;
}

double dataset_loss(const ctrl::Policy& policy, const std::vector<sim::Scene>& scenes,
                    const TrainConfig& cfg) {
    const int unroll = std::max(1, cfg.unroll);
    const std::vector<int> subset = fraction_subset(static_cast<int>(scenes.size()),
                                                    cfg.fraction, cfg.seed);
    double sq_sum = 0.0;
    std::int64_t count = 0;
    for (int scene_idx : subset) {
        const sim::Scene& scene = scenes[static_cast<std::size_t>(scene_idx)];
        ad::Tape tape;
        const ctrl::Policy::Bound bound = policy.bind(tape);
        std::mt19937_64 qrng(mix_seed(cfg.seed, 0xeca1u, static_cast<std::uint64_t>(scene_idx)));
        for (int t0 = 0; t0 + unroll <= scene.steps; t0 += unroll) {
            ad::Tensor q = autom::init_state(policy.config().qstates, cfg.q_init, qrng);
            for (int k = 0; k < unroll; ++k) {
                const int t = t0 + k;
                const ctrl::StepInputs in = demo_inputs(policy, scene, t);
                const ctrl::Policy::TapeOutput out = policy.forward_on_tape(tape, bound, in, q);
                q = out.q_next;
                const ctrl::Control& demo = scene.expert[static_cast<std::size_t>(t)].control;
                const double dv = out.v.item() - demo.v;
                const double dw = out.omega.item() - demo.omega;
                sq_sum += dv * dv + dw * dw;
                count += 2;
            }
        }
    }
    return count > 0 ? sq_sum / static_cast<double>(count) : 0.0;
}

void write_loss_csv(const std::filesystem::path& path, const std::vector<double>& curve) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out << "iteration,loss\n";
    char buf[64];
    for (std::size_t i = 0; i < curve.size(); ++i) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g\n", i, curve[i]);
        out << buf;
    }
}

}  // namespace vagn::train
