#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tomosar/model.hpp"
#include "tomosar/nonlocal.hpp"
#include "tomosar/simulate.hpp"
#include "tomosar/slimmer.hpp"

namespace tomosar {

inline constexpr const char* kToolVersion = "1.0.0";

struct GeometryConfig {
    double wavelength = 0.031;                          // [m]
    double range = 704000.0;                            // [m]
    double incidence_angle = 39.36 * 3.14159265358979323846 / 180.0;   // [rad]
    std::vector<double> baselines;                      // explicit; empty: drawn below
    std::size_t baseline_count = 29;
    double sigma_b = 100.0;                             // [m]
    std::uint64_t baseline_seed = 1;

    AcquisitionGeometry resolve() const;
};

struct NoiseConfig {
    std::optional<double> snr_db;   // absent: noiseless
    std::uint64_t seed = 2;
};

struct EvalConfig {
    std::size_t erosion = 2;
    double bin_width = 0.1;
};

struct RunConfig {
    SceneSpec scene = urban_scene();
    GeometryConfig geometry;
    NoiseConfig noise;
    NlParams nonlocal;
    PipelineOptions pipeline;
    std::size_t oversampling = 4;
    EvalConfig eval;

    void validate() const;
};

/// Parses a configuration document. Missing keys take their defaults; unknown keys, wrong
/// types and invalid values throw ConfigError. A run manifest is accepted as well: its
/// "config" member is used.
RunConfig parse_config(const nlohmann::json& doc);
RunConfig load_config(const std::filesystem::path& path);

/// Fully resolved document (explicit baselines, every default written out).
nlohmann::json to_json(const RunConfig& config);

nlohmann::json scene_to_json(const SceneSpec& scene);
SceneSpec scene_from_json(const nlohmann::json& doc);

/// Run manifest: tool version, command, resolved configuration, command parameters and outputs.
nlohmann::json make_manifest(const std::string& command, const RunConfig& config,
                             const nlohmann::json& parameters, const std::vector<std::string>& outputs);

void write_json(const std::filesystem::path& path, const nlohmann::json& doc);

}  // namespace tomosar
