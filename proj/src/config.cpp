#include "tomosar/config.hpp"

#include <cmath>
#include <fstream>
#include <initializer_list>

namespace tomosar {

using nlohmann::json;

namespace {

void check_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) throw ConfigError(where + ": expected an object");
    for (const auto& item : obj.items()) {
        bool known = false;
        for (const char* key : allowed) known = known || item.key() == key;
        if (!known) throw ConfigError(where + ": unknown key '" + item.key() + "'");
    }
}

template <class T>
void read(const json& obj, const std::string& where, const char* key, T& out) {
    if (!obj.contains(key)) return;
    const json& v = obj.at(key);
    const std::string name = where + "." + key;
    if constexpr (std::is_same_v<T, bool>) {
        if (!v.is_boolean()) throw ConfigError(name + ": expected a boolean");
        out = v.get<bool>();
    } else if constexpr (std::is_integral_v<T>) {
        if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<long long>() < 0))
            throw ConfigError(name + ": expected a non-negative integer");
        out = v.get<T>();
    } else if constexpr (std::is_floating_point_v<T>) {
        if (!v.is_number()) throw ConfigError(name + ": expected a number");
        out = v.get<T>();
    } else {
        if (!v.is_string()) throw ConfigError(name + ": expected a string");
        out = v.get<T>();
    }
}

void read_int(const json& obj, const std::string& where, const char* key, int& out) {
    std::size_t v = static_cast<std::size_t>(out);
    read(obj, where, key, v);
    if (v > 1000000) throw ConfigError(where + "." + key + ": value too large");
    out = static_cast<int>(v);
}

}  // namespace

AcquisitionGeometry GeometryConfig::resolve() const {
    AcquisitionGeometry geom;
    geom.wavelength = wavelength;
    geom.range = range;
    geom.incidence_angle = incidence_angle;
    geom.baselines = baselines.empty() ? baseline_distribution(baseline_count, baseline_seed, sigma_b) : baselines;
    return geom;
}

void RunConfig::validate() const {
    try {
        scene.validate();
        geometry.resolve().validate();
        nonlocal.validate();
        pipeline.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    if (noise.snr_db && std::isnan(*noise.snr_db)) throw ConfigError("noise.snr_db must be a number");
    if (oversampling == 0) throw ConfigError("pipeline.oversampling must be positive");
    if (!(eval.bin_width > 0.0)) throw ConfigError("eval.bin_width must be positive");
}

SceneSpec scene_from_json(const json& doc) {
    check_keys(doc, "scene", {"width", "height", "rectangles"});
    SceneSpec spec;
    spec.width = 0;
    spec.height = 0;
    if (!doc.contains("width") || !doc.contains("height")) throw ConfigError("scene: width and height are required");
    read(doc, "scene", "width", spec.width);
    read(doc, "scene", "height", spec.height);
    if (doc.contains("rectangles")) {
        const json& rects = doc.at("rectangles");
        if (!rects.is_array()) throw ConfigError("scene.rectangles: expected an array");
        for (std::size_t i = 0; i < rects.size(); ++i) {
            const std::string where = "scene.rectangles[" + std::to_string(i) + "]";
            check_keys(rects[i], where, {"origin_row", "origin_col", "rows", "cols", "height", "label"});
            SceneRectangle rect;
            read(rects[i], where, "origin_row", rect.origin_row);
            read(rects[i], where, "origin_col", rect.origin_col);
            read(rects[i], where, "rows", rect.rows);
            read(rects[i], where, "cols", rect.cols);
            read(rects[i], where, "height", rect.height);
            rect.label = "shape" + std::to_string(i + 1);
            read(rects[i], where, "label", rect.label);
            spec.rectangles.push_back(rect);
        }
    }
    return spec;
}

json scene_to_json(const SceneSpec& scene) {
    json rects = json::array();
    for (const auto& r : scene.rectangles)
        rects.push_back({{"origin_row", r.origin_row},
                         {"origin_col", r.origin_col},
                         {"rows", r.rows},
                         {"cols", r.cols},
                         {"height", r.height},
                         {"label", r.label}});
    return {{"width", scene.width}, {"height", scene.height}, {"rectangles", rects}};
}

RunConfig parse_config(const json& input) {
    const json* doc = &input;
    if (input.is_object() && input.contains("manifest_version")) {
        if (!input.contains("config")) throw ConfigError("manifest has no config member");
        doc = &input.at("config");
    }
    check_keys(*doc, "config", {"scene", "geometry", "noise", "nonlocal", "solver", "pipeline", "eval"});
    RunConfig cfg;
    if (doc->contains("scene")) cfg.scene = scene_from_json(doc->at("scene"));

    if (doc->contains("geometry")) {
        const json& g = doc->at("geometry");
        check_keys(g, "geometry",
                   {"wavelength", "range", "incidence_angle", "baselines", "baseline_count", "sigma_b", "baseline_seed"});
        auto& geo = cfg.geometry;
        read(g, "geometry", "wavelength", geo.wavelength);
        read(g, "geometry", "range", geo.range);
        read(g, "geometry", "incidence_angle", geo.incidence_angle);
        read(g, "geometry", "baseline_count", geo.baseline_count);
        read(g, "geometry", "sigma_b", geo.sigma_b);
        read(g, "geometry", "baseline_seed", geo.baseline_seed);
        if (g.contains("baselines")) {
            const json& b = g.at("baselines");
            if (!b.is_array()) throw ConfigError("geometry.baselines: expected an array");
            for (const auto& v : b) {
                if (!v.is_number()) throw ConfigError("geometry.baselines: expected numbers");
                geo.baselines.push_back(v.get<double>());
            }
            geo.baseline_count = geo.baselines.size();
        }
    }

    if (doc->contains("noise")) {
        const json& n = doc->at("noise");
        check_keys(n, "noise", {"snr_db", "seed"});
        if (n.contains("snr_db") && !n.at("snr_db").is_null()) {
            double snr = 0.0;
            read(n, "noise", "snr_db", snr);
            cfg.noise.snr_db = snr;
        }
        read(n, "noise", "seed", cfg.noise.seed);
    }

    if (doc->contains("nonlocal")) {
        const json& n = doc->at("nonlocal");
        check_keys(n, "nonlocal", {"patch_radius", "search_radius", "h"});
        read_int(n, "nonlocal", "patch_radius", cfg.nonlocal.patch_radius);
        read_int(n, "nonlocal", "search_radius", cfg.nonlocal.search_radius);
        read(n, "nonlocal", "h", cfg.nonlocal.h);
    }

    if (doc->contains("solver")) {
        const json& s = doc->at("solver");
        check_keys(s, "solver",
                   {"block_count", "max_iterations", "tolerance", "seed", "shrink", "initial_step", "accelerate",
                    "lambda_factor"});
        auto& so = cfg.pipeline.solver;
        read(s, "solver", "block_count", so.block_count);
        read(s, "solver", "max_iterations", so.max_iterations);
        read(s, "solver", "tolerance", so.tolerance);
        read(s, "solver", "seed", so.seed);
        read(s, "solver", "shrink", so.shrink);
        read(s, "solver", "initial_step", so.initial_step);
        read(s, "solver", "accelerate", so.accelerate);
        read(s, "solver", "lambda_factor", cfg.pipeline.lambda_factor);
    }

    if (doc->contains("pipeline")) {
        const json& p = doc->at("pipeline");
        check_keys(p, "pipeline", {"k_max", "support_threshold", "penalty_weight", "oversampling"});
        read(p, "pipeline", "k_max", cfg.pipeline.k_max);
        read(p, "pipeline", "support_threshold", cfg.pipeline.support_threshold);
        read(p, "pipeline", "penalty_weight", cfg.pipeline.penalty_weight);
        read(p, "pipeline", "oversampling", cfg.oversampling);
    }

    if (doc->contains("eval")) {
        const json& e = doc->at("eval");
        check_keys(e, "eval", {"erosion", "bin_width"});
        read(e, "eval", "erosion", cfg.eval.erosion);
        read(e, "eval", "bin_width", cfg.eval.bin_width);
    }

    cfg.validate();
    return cfg;
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
    return parse_config(doc);
}

json to_json(const RunConfig& cfg) {
    const AcquisitionGeometry geom = cfg.geometry.resolve();
    const auto& so = cfg.pipeline.solver;
    json doc;
    doc["scene"] = scene_to_json(cfg.scene);
    doc["geometry"] = {{"wavelength", geom.wavelength},
                       {"range", geom.range},
                       {"incidence_angle", geom.incidence_angle},
                       {"baselines", geom.baselines},
                       {"baseline_count", geom.size()},
                       {"sigma_b", cfg.geometry.sigma_b},
                       {"baseline_seed", cfg.geometry.baseline_seed}};
    doc["noise"] = {{"snr_db", cfg.noise.snr_db ? json(*cfg.noise.snr_db) : json(nullptr)}, {"seed", cfg.noise.seed}};
    doc["nonlocal"] = {{"patch_radius", cfg.nonlocal.patch_radius},
                       {"search_radius", cfg.nonlocal.search_radius},
                       {"h", cfg.nonlocal.h}};
    doc["solver"] = {{"block_count", so.block_count}, {"max_iterations", so.max_iterations},
                     {"tolerance", so.tolerance},     {"seed", so.seed},
                     {"shrink", so.shrink},           {"initial_step", so.initial_step},
                     {"accelerate", so.accelerate},   {"lambda_factor", cfg.pipeline.lambda_factor}};
    doc["pipeline"] = {{"k_max", cfg.pipeline.k_max},
                       {"support_threshold", cfg.pipeline.support_threshold},
                       {"penalty_weight", cfg.pipeline.penalty_weight},
                       {"oversampling", cfg.oversampling}};
    doc["eval"] = {{"erosion", cfg.eval.erosion}, {"bin_width", cfg.eval.bin_width}};
    return doc;
}

json make_manifest(const std::string& command, const RunConfig& config, const json& parameters,
                   const std::vector<std::string>& outputs) {
    return {{"manifest_version", 1},
            {"tool", "tomosar"},
            {"tool_version", kToolVersion},
            {"command", command},
            {"parameters", parameters},
            {"outputs", outputs},
            {"config", to_json(config)}};
}

void write_json(const std::filesystem::path& path, const json& doc) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    out << doc.dump(2) << '\n';
}

}  // namespace tomosar
