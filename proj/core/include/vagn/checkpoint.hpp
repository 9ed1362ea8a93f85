#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "vagn/controller.hpp"
#include "vagn/scene.hpp"

namespace vagn::io {

// Single-file checkpoint: 8-byte magic "VAGNCKP1", little-endian u64 manifest
// length, JSON manifest (config + parameter names/shapes/offsets), then all
// parameter tensors as little-endian float64 in manifest order.
void save_checkpoint(const std::filesystem::path& path, const ctrl::Policy& policy);
ctrl::Policy load_checkpoint(const std::filesystem::path& path);

// FNV-1a over the file bytes; used to stamp run manifests.
std::uint64_t file_hash(const std::filesystem::path& path);

// Dataset directory: scene_###.json files plus an index with the split.
struct DatasetIndex {
    std::vector<std::string> train;
    std::vector<std::string> val;
};

void save_dataset_index(const std::filesystem::path& dir, const DatasetIndex& index);
DatasetIndex load_dataset_index(const std::filesystem::path& dir);
std::vector<sim::Scene> load_scenes(const std::filesystem::path& dir,
                                    const std::vector<std::string>& names);

// One JSON manifest per artifact-producing run.
struct RunManifest {
    std::string command;
    std::string config_snapshot;  // serialized JSON
    std::uint64_t seed = 0;
    std::uint64_t checkpoint_hash = 0;
    std::vector<std::string> outputs;
    double wall_clock_sec = 0.0;
};

void write_run_manifest(const std::filesystem::path& path, const RunManifest& manifest);

std::string config_to_json(const ctrl::ControllerConfig& cfg);
ctrl::ControllerConfig config_from_json(const std::string& text);

}  // namespace vagn::io
