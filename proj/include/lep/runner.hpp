#pragma once

// Runs an experiment configuration and writes its artifacts.

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "lep/config.hpp"

namespace lep::cli {

inline constexpr std::string_view kToolVersion = "0.1.0";

std::uint64_t fnv1a(std::string_view bytes);
std::string hex64(std::uint64_t h);

struct OutputFile {
    std::string name;
    std::uint64_t bytes = 0;
    std::uint64_t fnv1a = 0;
};

struct RunManifest {
    std::uint64_t config_hash = 0;
    std::string tool_version{kToolVersion};
    double wall_time = 0.0;
    std::vector<OutputFile> outputs;

    std::string to_json() const;
};

struct RunOptions {
    std::filesystem::path out_dir = ".";
    int threads = 1;
    /// Forces step-doubling validation on every trajectory.
    bool check_steps = false;
};

/// Writes <prefix>_* artifacts plus <prefix>_config.txt and manifest.json into out_dir.
/// Throws IoError and any engine error.
RunManifest run_experiment(const ExperimentConfig& cfg, const RunOptions& opts);

}  // namespace lep::cli
