#include "vagn/checkpoint.hpp"

#include <algorithm>
#include <bit>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "vagn/errors.hpp"

namespace vagn::io {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'V', 'A', 'G', 'N', 'C', 'K', 'P', '1'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint writer assumes a little-endian host");

json config_json(const ctrl::ControllerConfig& cfg) {
    return json{{"kind", ctrl::kind_name(cfg.kind)},
                {"predicates", cfg.predicates},
                {"qstates", cfg.qstates},
                {"raster_size", cfg.raster_size},
                {"raster_channels", cfg.raster_channels},
                {"resolution", cfg.resolution},
                {"conv_filters", {cfg.conv_filters[0], cfg.conv_filters[1], cfg.conv_filters[2]}},
                {"fc_hidden", cfg.fc_hidden},
                {"alpha_max", cfg.alpha_max},
                {"beta_max", cfg.beta_max},
                {"control_dt", cfg.control_dt},
                {"critical_damping", cfg.critical_damping},
                {"zeta_min", cfg.zeta_min},
                {"zeta_weight", cfg.zeta_weight},
                {"unroll", cfg.unroll},
                {"lookahead", cfg.lookahead},
                {"v_max", cfg.v_max},
                {"omega_max", cfg.omega_max}};
}

ctrl::ControllerConfig config_from(const json& j) {
    ctrl::ControllerConfig cfg;
    cfg.kind = ctrl::kind_from_name(j.value("kind", "full"));
    cfg.predicates = j.value("predicates", cfg.predicates);
    cfg.qstates = j.value("qstates", cfg.qstates);
    cfg.raster_size = j.value("raster_size", cfg.raster_size);
    cfg.raster_channels = j.value("raster_channels", cfg.raster_channels);
    cfg.resolution = j.value("resolution", cfg.resolution);
    if (j.contains("conv_filters")) {
        for (int i = 0; i < 3; ++i) {
            cfg.conv_filters[static_cast<std::size_t>(i)] = j.at("conv_filters").at(i).get<int>();
        }
    }
    cfg.fc_hidden = j.value("fc_hidden", cfg.fc_hidden);
    cfg.alpha_max = j.value("alpha_max", cfg.alpha_max);
    cfg.beta_max = j.value("beta_max", cfg.beta_max);
    cfg.control_dt = j.value("control_dt", cfg.control_dt);
    cfg.critical_damping = j.value("critical_damping", cfg.critical_damping);
    cfg.zeta_min = j.value("zeta_min", cfg.zeta_min);
    cfg.zeta_weight = j.value("zeta_weight", cfg.zeta_weight);
    cfg.unroll = j.value("unroll", cfg.unroll);
    cfg.lookahead = j.value("lookahead", cfg.lookahead);
    cfg.v_max = j.value("v_max", cfg.v_max);
    cfg.omega_max = j.value("omega_max", cfg.omega_max);
    return cfg;
}

}  // namespace

std::string config_to_json(const ctrl::ControllerConfig& cfg) { return config_json(cfg).dump(); }

ctrl::ControllerConfig config_from_json(const std::string& text) {
    try {
        return config_from(json::parse(text));
    } catch (const json::exception& e) {
        throw SchemaError(std::string("bad controller config: ") + e.what());
    }
}

void save_checkpoint(const std::filesystem::path& path, const ctrl::Policy& policy) {
    const ad::ParamSet& params = policy.params();
    json manifest;
    manifest["format_version"] = 1;
    manifest["config"] = config_json(policy.config());
    json plist = json::array();
    std::uint64_t offset = 0;
    for (int i = 0; i < params.count(); ++i) {
        json p;
        p["name"] = params.name(i);
        p["shape"] = params[i].shape;
        p["offset"] = offset;
        offset += static_cast<std::uint64_t>(params[i].size());
        plist.push_back(p);
    }
    manifest["params"] = plist;
    manifest["total_values"] = offset;
    const std::string mtext = manifest.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path.string() + " for writing");
    }
    out.write(kMagic, sizeof(kMagic));
    const std::uint64_t mlen = mtext.size();
    out.write(reinterpret_cast<const char*>(&mlen), sizeof(mlen));
    out.write(mtext.data(), static_cast<std::streamsize>(mtext.size()));
    for (int i = 0; i < params.count(); ++i) {
        const auto& data = params[i].data;
        out.write(reinterpret_cast<const char*>(data.data()),
                  static_cast<std::streamsize>(data.size() * sizeof(double)));
    }
    if (!out) {
        throw IoError("failed writing checkpoint " + path.string());
    }
}

ctrl::Policy load_checkpoint(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open checkpoint " + path.string());
    }
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw SchemaError(path.string() + " is not a checkpoint file");
    }
    std::uint64_t mlen = 0;
    in.read(reinterpret_cast<char*>(&mlen), sizeof(mlen));
    if (!in || mlen == 0 || mlen > (1u << 20)) {
        throw SchemaError("checkpoint manifest length is implausible");
    }
    std::string mtext(mlen, '\0');
    in.read(mtext.data(), static_cast<std::streamsize>(mlen));
    json manifest;
    try {
        manifest = json::parse(mtext);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("checkpoint manifest is not valid JSON: ") + e.what());
    }
    try {
        if (manifest.at("format_version").get<int>() != 1) {
            throw SchemaError("unsupported checkpoint format version");
        }
        ctrl::Policy policy(config_from(manifest.at("config")), 0);
        ad::ParamSet& params = policy.params();
        const json& plist = manifest.at("params");
        if (static_cast<int>(plist.size()) != params.count()) {
            throw SchemaError("checkpoint parameter list does not match the model");
        }
        for (int i = 0; i < params.count(); ++i) {
            const json& p = plist.at(static_cast<std::size_t>(i));
            if (p.at("name").get<std::string>() != params.name(i)) {
                throw SchemaError("checkpoint parameter order mismatch at " + params.name(i));
            }
            const std::vector<int> shape = p.at("shape").get<std::vector<int>>();
            if (shape != params[i].shape) {
                throw SchemaError("checkpoint shape mismatch for " + params.name(i));
            }
            in.read(reinterpret_cast<char*>(params[i].data.data()),
                    static_cast<std::streamsize>(params[i].data.size() * sizeof(double)));
            if (!in) {
                throw SchemaError("checkpoint truncated at " + params.name(i));
            }
        }
        return policy;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("checkpoint manifest is missing fields: ") + e.what());
    }
}

std::uint64_t file_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    std::uint64_t h = 1469598103934665603ull;
    char buf[4096];
    while (in) {
        in.read(buf, sizeof(buf));
        const std::streamsize n = in.gcount();
        for (std::streamsize i = 0; i < n; ++i) {
            h ^= static_cast<unsigned char>(buf[i]);
            h *= 1099511628211ull;
        }
    }
    return h;
}

void save_dataset_index(const std::filesystem::path& dir, const DatasetIndex& index) {
    json j;
    j["schema"] = "vagn-dataset-v1";
    j["train"] = index.train;
    j["val"] = index.val;
    std::ofstream out(dir / "dataset.json");
    if (!out) {
        throw IoError("cannot write dataset index in " + dir.string());
    }
    out << j.dump(1, '\t') << "\n";
}

DatasetIndex load_dataset_index(const std::filesystem::path& dir) {
    std::ifstream in(dir / "dataset.json");
    if (!in) {
        throw IoError("no dataset.json in " + dir.string());
    }
    json j;
    try {
        in >> j;
        if (j.at("schema").get<std::string>() != "vagn-dataset-v1") {
            throw SchemaError("unsupported dataset schema in " + dir.string());
        }
        DatasetIndex index;
        index.train = j.at("train").get<std::vector<std::string>>();
        index.val = j.at("val").get<std::vector<std::string>>();
        return index;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("bad dataset index: ") + e.what());
    }
}

std::vector<sim::Scene> load_scenes(const std::filesystem::path& dir,
                                    const std::vector<std::string>& names) {
    std::vector<sim::Scene> scenes;
    scenes.reserve(names.size());
    for (const std::string& name : names) {
        scenes.push_back(sim::load_scene(dir / name));
    }
    return scenes;
}

void write_run_manifest(const std::filesystem::path& path, const RunManifest& manifest) {
    json j;
    j["schema"] = "vagn-run-v1";
    j["command"] = manifest.command;
    j["config"] = manifest.config_snapshot.empty()
                      ? json(nullptr)
                      : json::parse(manifest.config_snapshot, nullptr, false);
    j["seed"] = manifest.seed;
    j["checkpoint_hash"] = manifest.checkpoint_hash;
    j["outputs"] = manifest.outputs;
    j["wall_clock_sec"] = manifest.wall_clock_sec;
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write manifest " + path.string());
    }
    out << j.dump(1, '\t') << "\n";
}

}  // namespace vagn::io
