// vagn: data generation, behavior-cloning training, closed-loop rollout,
// metric evaluation, sweeps, and saliency export for the hierarchical
// automaton/DMP driving controller.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "vagn/checkpoint.hpp"
#include "vagn/errors.hpp"
#include "vagn/metrics.hpp"
#include "vagn/perception.hpp"
#include "vagn/scene.hpp"
#include "vagn/simulator.hpp"
#include "vagn/sweeps.hpp"
#include "vagn/trainer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace vagn;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitSchema = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitIo = 5;

struct Timer {
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
    double seconds() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }
};

int default_jobs() {
    const unsigned n = std::thread::hardware_concurrency();
    return n == 0 ? 1 : static_cast<int>(n);
}

// Config file: {"model": {...}, "train": {...}}, every field optional.
struct FileConfig {
    ctrl::ControllerConfig model;
    train::TrainConfig training;
};

FileConfig load_file_config(const std::string& path) {
    FileConfig cfg;
    if (path.empty()) {
        return cfg;
    }
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open config file " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (j.contains("model")) {
        cfg.model = io::config_from_json(j.at("model").dump());
    }
    if (j.contains("train")) {
        const json& t = j.at("train");
        cfg.training.iterations = t.value("iterations", cfg.training.iterations);
        cfg.training.minibatch = t.value("minibatch", cfg.training.minibatch);
        cfg.training.lr = t.value("lr", cfg.training.lr);
        cfg.training.fraction = t.value("fraction", cfg.training.fraction);
        cfg.training.seed = t.value("seed", cfg.training.seed);
        cfg.training.unroll = t.value("unroll", cfg.training.unroll);
        const std::string opt = t.value("optimizer", std::string("adam"));
        if (opt != "adam" && opt != "sgd") {
            throw SchemaError("config: optimizer must be adam or sgd");
        }
        cfg.training.sgd = opt == "sgd";
        const std::string qi = t.value("q_init", std::string("uniform"));
        if (qi != "uniform" && qi != "random") {
            throw SchemaError("config: q_init must be uniform or random");
        }
        cfg.training.q_init = qi == "random" ? autom::QInit::random : autom::QInit::uniform;
    }
    cfg.model.unroll = cfg.training.unroll;
    return cfg;
}

json train_config_json(const train::TrainConfig& t) {
    return json{{"iterations", t.iterations},
                {"minibatch", t.minibatch},
                {"lr", t.lr},
                {"optimizer", t.sgd ? "sgd" : "adam"},
                {"q_init", t.q_init == autom::QInit::random ? "random" : "uniform"},
                {"unroll", t.unroll},
                {"fraction", t.fraction},
                {"seed", t.seed}};
}

void write_manifest(const fs::path& where, const std::string& command, const json& config,
                    std::uint64_t seed, std::uint64_t ckpt_hash,
                    const std::vector<std::string>& outputs, double wall) {
    io::RunManifest manifest;
    manifest.command = command;
    manifest.config_snapshot = config.dump();
    manifest.seed = seed;
    manifest.checkpoint_hash = ckpt_hash;
    manifest.outputs = outputs;
    manifest.wall_clock_sec = wall;
    io::write_run_manifest(where, manifest);
}

std::vector<std::uint64_t> parse_seeds(const std::string& text) {
    std::vector<std::uint64_t> seeds;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string tok = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
        if (!tok.empty()) {
            seeds.push_back(std::stoull(tok));
        }
        if (comma == std::string::npos) {
            break;
        }
        pos = comma + 1;
    }
    if (seeds.empty()) {
        throw SchemaError("no seeds given");
    }
    return seeds;
}

int cmd_gen_data(const fs::path& out, int scenes, std::uint64_t seed) {
    Timer timer;
    fs::create_directories(out);
    io::DatasetIndex index;
    const int train_count = scenes * 4 / 5;
    std::vector<std::string> outputs;
    for (int i = 0; i < scenes; ++i) {
        const auto kind = static_cast<sim::SceneKind>(i % 5);
        const sim::Scene scene = sim::generate_scene(kind, seed + static_cast<std::uint64_t>(i));
        char name[64];
        std::snprintf(name, sizeof(name), "scene_%03d.json", i);
        sim::save_scene(scene, out / name);
        (i < train_count ? index.train : index.val).push_back(name);
        outputs.push_back(name);
    }
    io::save_dataset_index(out, index);
    write_manifest(out / "run_manifest.json", "gen-data",
                   json{{"scenes", scenes}, {"train", index.train.size()},
                        {"val", index.val.size()}},
                   seed, 0, outputs, timer.seconds());
    std::printf("generated %d scenes (%zu train / %zu val) in %s\n", scenes, index.train.size(),
                index.val.size(), out.string().c_str());
    return kExitOk;
}

int cmd_train(const fs::path& data, const fs::path& out, FileConfig cfg, int jobs) {
    (void)jobs;
    Timer timer;
    const io::DatasetIndex index = io::load_dataset_index(data);
    const std::vector<sim::Scene> scenes = io::load_scenes(data, index.train);
    if (!scenes.empty()) {
        if (scenes.front().raster.size != cfg.model.raster_size ||
            scenes.front().raster.channels != cfg.model.raster_channels) {
            throw SchemaError("model raster config disagrees with the dataset raster spec");
        }
    }
    ctrl::Policy policy(cfg.model, cfg.training.seed);
    std::printf("training %s: %lld parameters, %d iterations, minibatch %d\n",
                ctrl::kind_name(cfg.model.kind), static_cast<long long>(policy.param_count()),
                cfg.training.iterations, cfg.training.minibatch);
    const train::TrainResult result =
        train::fit(policy, scenes, cfg.training, [](int iter, double loss) {
            std::printf("  iter %6d  loss %.6g\n", iter, loss);
            std::fflush(stdout);
        });
    fs::create_directories(out.parent_path().empty() ? "." : out.parent_path());
    io::save_checkpoint(out, policy);
    const fs::path loss_path = out.parent_path() / (out.stem().string() + "_loss.csv");
    train::write_loss_csv(loss_path, result.loss_curve);
    write_manifest(out.parent_path() / (out.stem().string() + "_manifest.json"), "train",
                   json{{"model", json::parse(io::config_to_json(cfg.model))},
                        {"train", train_config_json(cfg.training)},
                        {"initial_loss", result.initial_loss},
                        {"final_loss", result.final_loss}},
                   cfg.training.seed, io::file_hash(out),
                   {out.filename().string(), loss_path.filename().string()}, timer.seconds());
    std::printf("loss %.6g -> %.6g, checkpoint %s (%.1f s)\n", result.initial_loss,
                result.final_loss, out.string().c_str(), timer.seconds());
    return kExitOk;
}

int cmd_rollout(const fs::path& ckpt, const fs::path& scene_file, const fs::path& trace_out,
                std::uint64_t seed) {
    Timer timer;
    const ctrl::Policy policy = io::load_checkpoint(ckpt);
    const sim::Scene scene = sim::load_scene(scene_file);
    const sim::RolloutTrace trace = sim::rollout(scene, policy, seed);
    sim::save_trace_csv(trace, trace_out);
    write_manifest(trace_out.parent_path() / (trace_out.stem().string() + "_manifest.json"),
                   "rollout", json{{"scene", scene.id}}, seed, io::file_hash(ckpt),
                   {trace_out.filename().string()}, timer.seconds());
    const train::MetricsRow row = train::compute_metrics(scene, trace);
    std::printf("rollout %s: ade %.3f m, goal %.3f m, close %.1f%%, accel %.2f m/s^2\n",
                scene.id.c_str(), row.ade, row.goal_distance, 100.0 * row.close_encounter_pct,
                row.max_accel);
    return kExitOk;
}

int cmd_eval(const fs::path& ckpt, const fs::path& data, const std::string& seeds_text,
             const fs::path& out, int jobs, double radius) {
    Timer timer;
    const ctrl::Policy policy = io::load_checkpoint(ckpt);
    const io::DatasetIndex index = io::load_dataset_index(data);
    const std::vector<sim::Scene> scenes = io::load_scenes(data, index.val);
    if (scenes.empty()) {
        throw SchemaError("dataset has no validation scenes");
    }
    if (scenes.front().raster.size != policy.config().raster_size ||
        scenes.front().raster.channels != policy.config().raster_channels) {
        throw SchemaError("checkpoint raster config disagrees with the dataset raster spec");
    }
    const std::vector<std::uint64_t> seeds = parse_seeds(seeds_text);
    const train::EvalResult result = train::evaluate(policy, scenes, seeds, jobs, radius);
    train::write_metrics_csv(out, result);
    write_manifest(out.parent_path() / (out.stem().string() + "_manifest.json"), "eval",
                   json{{"seeds", seeds}, {"radius", radius}, {"scenes", scenes.size()}},
                   seeds.front(), io::file_hash(ckpt), {out.filename().string()},
                   timer.seconds());
    const auto& s = result.summary;
    std::printf("eval over %zu scenes x %zu seeds:\n", scenes.size(), seeds.size());
    std::printf("  close encounters  %.1f%% +- %.1f%%\n", 100.0 * s.close_encounter_mean,
                100.0 * s.close_encounter_std);
    std::printf("  max accel         %.3f +- %.3f m/s^2\n", s.max_accel_mean, s.max_accel_std);
    std::printf("  ade               %.3f +- %.3f m\n", s.ade_mean, s.ade_std);
    std::printf("  goal distance     %.3f +- %.3f m\n", s.goal_distance_mean,
                s.goal_distance_std);
    return kExitOk;
}

std::vector<double> parse_fractions(const std::string& text) {
    std::vector<double> out;
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t comma = text.find(',', pos);
        const std::string tok = text.substr(pos, comma == std::string::npos ? comma : comma - pos);
        if (!tok.empty()) {
            out.push_back(std::stod(tok));
        }
        if (comma == std::string::npos) {
            break;
        }
        pos = comma + 1;
    }
    if (out.empty()) {
        throw SchemaError("empty fraction list");
    }
    return out;
}

int cmd_sweep(const std::string& kind, const fs::path& data, const fs::path& out,
              const std::string& seeds_text, const std::string& fractions_text,
              const std::string& qstates_text, FileConfig cfg, int jobs) {
    Timer timer;
    const io::DatasetIndex index = io::load_dataset_index(data);
    const std::vector<sim::Scene> train_scenes = io::load_scenes(data, index.train);
    const std::vector<sim::Scene> val_scenes = io::load_scenes(data, index.val);
    const std::vector<std::uint64_t> seeds = parse_seeds(seeds_text);

    std::vector<train::SweepCell> cells;
    if (kind == "sample") {
        cells = train::sample_efficiency_cells(cfg.model, cfg.training,
                                               parse_fractions(fractions_text), seeds);
    } else if (kind == "qstates") {
        std::vector<int> ns;
        for (std::uint64_t v : parse_seeds(qstates_text)) {
            ns.push_back(static_cast<int>(v));
        }
        cells = train::qstate_cells(cfg.model, cfg.training, ns, seeds);
    } else if (kind == "ablation") {
        cells = train::ablation_cells(cfg.model, cfg.training, seeds);
    } else {
        throw SchemaError("sweep kind must be sample, qstates, or ablation");
    }
    std::printf("sweep %s: %zu cells, %d jobs\n", kind.c_str(), cells.size(), jobs);
    const std::vector<train::SweepRow> rows = run_sweep(cells, train_scenes, val_scenes, jobs);
    train::write_sweep_csv(out, rows);
    write_manifest(out.parent_path() / (out.stem().string() + "_manifest.json"), "sweep",
                   json{{"kind", kind}, {"cells", cells.size()},
                        {"train", train_config_json(cfg.training)}},
                   seeds.front(), 0, {out.filename().string()}, timer.seconds());
    for (const train::SweepRow& row : rows) {
        std::printf("  %-14s seed %llu  params %6lld  ade %6.3f  goal %6.3f  close %5.1f%%\n",
                    row.label.c_str(), static_cast<unsigned long long>(row.seed),
                    static_cast<long long>(row.param_count), row.ade, row.goal_distance,
                    100.0 * row.close_encounter_pct);
    }
    std::printf("sweep finished in %.1f s -> %s\n", timer.seconds(), out.string().c_str());
    return kExitOk;
}

int cmd_saliency(const fs::path& ckpt, const fs::path& scene_file, const fs::path& out,
                 std::uint64_t seed) {
    Timer timer;
    const ctrl::Policy policy = io::load_checkpoint(ckpt);
    const sim::Scene scene = sim::load_scene(scene_file);
    const ctrl::ControllerConfig& cfg = policy.config();
    if (cfg.kind != ctrl::PolicyKind::full && cfg.kind != ctrl::PolicyKind::vagn_only) {
        throw SchemaError("saliency export needs a policy with an automaton");
    }
    fs::create_directories(out);

    std::ofstream indexcsv(out / "index.csv");
    std::ofstream qcsv(out / "qdist.csv");
    std::ofstream pcsv(out / "params.csv");
    std::ofstream tcsv(out / "transitions.csv");
    if (!indexcsv || !qcsv || !pcsv || !tcsv) {
        throw IoError("cannot write saliency outputs in " + out.string());
    }
    indexcsv << "step,qstate,file\n";
    qcsv << "step";
    for (int i = 0; i < cfg.qstates; ++i) {
        qcsv << ",q" << i;
    }
    qcsv << "\n";
    pcsv << "step,alpha_y,beta_y,alpha_q,beta_q\n";
    tcsv << "step,row,col,value\n";

    ctrl::EgoState ego = scene.ego_init;
    std::mt19937_64 rng(seed);
    ad::Tensor q = autom::init_state(cfg.qstates, autom::QInit::uniform, rng);
    const ad::Tensor& W = policy.params().at("vagn.w");
    const ad::Tensor& pred_w = policy.params().at("pred.w");
    std::vector<std::string> outputs{"index.csv", "qdist.csv", "params.csv", "transitions.csv"};
    char buf[160];
    for (int t = 0; t < scene.steps; ++t) {
        const vision::BevRaster raster = sim::rasterize(scene, ego, t, scene.raster);
        const ctrl::Policy::StepExplain ex = policy.act_explained(raster, ego, scene.route, q);
        q = ex.diag.q_next;
        for (int n = 0; n < cfg.qstates; ++n) {
            const ad::Tensor map =
                vision::qstate_saliency(ex.features, pred_w, W, ex.diag.pv, n, cfg.raster_size);
            std::snprintf(buf, sizeof(buf), "saliency_t%02d_q%02d.pgm", t, n);
            vision::write_pgm(out / buf, map);
            indexcsv << t << "," << n << "," << buf << "\n";
            outputs.emplace_back(buf);
        }
        qcsv << t;
        for (int i = 0; i < q.size(); ++i) {
            std::snprintf(buf, sizeof(buf), ",%.17g", q[i]);
            qcsv << buf;
        }
        qcsv << "\n";
        std::snprintf(buf, sizeof(buf), "%d,%.17g,%.17g,%.17g,%.17g\n", t,
                      ex.diag.params.alpha_y, ex.diag.params.beta_y, ex.diag.params.alpha_q,
                      ex.diag.params.beta_q);
        pcsv << buf;
        for (int r = 0; r < cfg.qstates; ++r) {
            for (int c = 0; c < cfg.qstates; ++c) {
                std::snprintf(buf, sizeof(buf), "%d,%d,%d,%.17g\n", t, r, c,
                              ex.transition[r * cfg.qstates + c]);
                tcsv << buf;
            }
        }
        ego = sim::step_ego(ego, ex.diag.control, scene.dt);
    }
    write_manifest(out / "run_manifest.json", "saliency", json{{"scene", scene.id}}, seed,
                   io::file_hash(ckpt), outputs, timer.seconds());
    std::printf("saliency export: %d steps x %d q-states -> %s\n", scene.steps, cfg.qstates,
                out.string().c_str());
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchical automaton/DMP driving controller"};
    app.require_subcommand(1);
    app.failure_message(CLI::FailureMessage::simple);

    std::string out, data, ckpt, scene, trace, config_path, seeds = "1,2,3", sweep_kind;
    int scenes_count = 80;
    std::uint64_t seed = 1;
    int jobs = default_jobs();
    double radius = 3.0;
    int iterations = -1;
    double fraction = -1.0;
    double lr = -1.0;
    int qstates = -1;
    int unroll = -1;
    std::string kind_name, optimizer;
    bool critical_damping = false;
    double zeta_min = -1.0, zeta_weight = -1.0;

    auto* gen = app.add_subcommand("gen-data", "generate a synthetic scene dataset");
    gen->add_option("--out", out, "output directory")->required();
    gen->add_option("--scenes", scenes_count, "number of scenes (80% train / 20% val)");
    gen->add_option("--seed", seed, "base seed");

    auto* tr = app.add_subcommand("train", "behavior-clone a policy from a dataset");
    tr->add_option("--data", data, "dataset directory")->required();
    tr->add_option("--out", ckpt, "output checkpoint path")->required();
    tr->add_option("--config", config_path, "JSON config file (model + train sections)");
    tr->add_option("--iterations", iterations, "training iterations");
    tr->add_option("--seed", seed, "training seed");
    tr->add_option("--fraction", fraction, "fraction of training scenes");
    tr->add_option("--lr", lr, "learning rate");
    tr->add_option("--kind", kind_name, "policy kind: full|vagn_only|dmp_only|baseline");
    tr->add_option("--qstates", qstates, "automaton node count");
    tr->add_option("--unroll", unroll, "automaton unroll length K");
    tr->add_option("--optimizer", optimizer, "adam|sgd");
    tr->add_flag("--sgd", "plain gradient descent (same as --optimizer sgd)");
    tr->add_flag("--critical-damping", critical_damping, "tie beta = alpha/4");
    tr->add_option("--zeta-min", zeta_min, "hinge threshold on the damping ratio");
    tr->add_option("--zeta-weight", zeta_weight, "hinge penalty weight");
    tr->add_option("--jobs", jobs, "worker threads");

    auto* ro = app.add_subcommand("rollout", "closed-loop rollout on one scene");
    ro->add_option("--ckpt", ckpt, "checkpoint")->required();
    ro->add_option("--scene", scene, "scene file")->required();
    ro->add_option("--trace", trace, "output trace CSV")->required();
    ro->add_option("--seed", seed, "rollout seed");

    auto* ev = app.add_subcommand("eval", "evaluate a checkpoint on the validation split");
    ev->add_option("--ckpt", ckpt, "checkpoint")->required();
    ev->add_option("--data", data, "dataset directory")->required();
    ev->add_option("--seeds", seeds, "comma-separated rollout seeds");
    ev->add_option("--out", out, "metrics CSV")->required();
    ev->add_option("--jobs", jobs, "parallel rollouts");
    ev->add_option("--radius", radius, "close-encounter radius (m)");

    std::string fractions = "0.25,0.5,0.75,1.0";
    std::string qstates_list = "3,6,9,12";
    auto* sw = app.add_subcommand("sweep", "train/evaluate grids: sample, qstates, ablation");
    sw->add_option("--kind", sweep_kind, "sample|qstates|ablation")->required();
    sw->add_option("--data", data, "dataset directory")->required();
    sw->add_option("--out", out, "sweep CSV")->required();
    sw->add_option("--seeds", seeds, "comma-separated training seeds");
    sw->add_option("--config", config_path, "JSON config file");
    sw->add_option("--iterations", iterations, "training iterations per cell");
    sw->add_option("--fractions", fractions, "data fractions for the sample sweep");
    sw->add_option("--qstates-grid", qstates_list, "node counts for the q-state sweep");
    sw->add_option("--jobs", jobs, "parallel cells");

    auto* sa = app.add_subcommand("saliency", "per-step, per-q-state saliency export");
    sa->add_option("--ckpt", ckpt, "checkpoint")->required();
    sa->add_option("--scene", scene, "scene file")->required();
    sa->add_option("--out", out, "output directory")->required();
    sa->add_option("--seed", seed, "rollout seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (gen->parsed()) {
            return cmd_gen_data(out, scenes_count, seed);
        }
        FileConfig cfg = load_file_config(config_path);
        if (iterations > 0) {
            cfg.training.iterations = iterations;
        }
        if (fraction > 0.0) {
            cfg.training.fraction = fraction;
        }
        if (lr > 0.0) {
            cfg.training.lr = lr;
        }
        if (qstates > 0) {
            cfg.model.qstates = qstates;
        }
        if (unroll > 0) {
            cfg.training.unroll = unroll;
            cfg.model.unroll = unroll;
        }
        if (!kind_name.empty()) {
            cfg.model.kind = ctrl::kind_from_name(kind_name);
        }
        if (!optimizer.empty()) {
            if (optimizer != "adam" && optimizer != "sgd") {
                throw SchemaError("optimizer must be adam or sgd");
            }
            cfg.training.sgd = optimizer == "sgd";
        }
        if (tr->parsed() && tr->count("--sgd") > 0) {
            cfg.training.sgd = true;
        }
        if (critical_damping) {
            cfg.model.critical_damping = true;
        }
        if (zeta_min > 0.0) {
            cfg.model.zeta_min = zeta_min;
        }
        if (zeta_weight > 0.0) {
            cfg.model.zeta_weight = zeta_weight;
        }
        if (tr->parsed() && tr->count("--seed") > 0) {
            cfg.training.seed = seed;
        }

        if (tr->parsed()) {
            return cmd_train(data, ckpt, cfg, jobs);
        }
        if (ro->parsed()) {
            return cmd_rollout(ckpt, scene, trace, seed);
        }
        if (ev->parsed()) {
            return cmd_eval(ckpt, data, seeds, out, jobs, radius);
        }
        if (sw->parsed()) {
            return cmd_sweep(sweep_kind, data, out, seeds, fractions, qstates_list, cfg, jobs);
        }
        if (sa->parsed()) {
            return cmd_saliency(ckpt, scene, out, seed);
        }
    } catch (const SchemaError& e) {
        std::fprintf(stderr, "error: schema: %s\n", e.what());
        return kExitSchema;
    } catch (const NumericError& e) {
        std::fprintf(stderr, "error: numeric: %s\n", e.what());
        return kExitNumeric;
    } catch (const IoError& e) {
        std::fprintf(stderr, "error: io: %s\n", e.what());
        return kExitIo;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kExitUsage;
    }
    return kExitUsage;
}
