// tomosar: simulate, filter, invert and evaluate SAR tomography stacks.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "tomosar/config.hpp"
#include "tomosar/crlb.hpp"
#include "tomosar/eval.hpp"
#include "tomosar/io.hpp"
#include "tomosar/nonlocal.hpp"
#include "tomosar/parallel.hpp"
#include "tomosar/slimmer.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace tomosar;

namespace {

enum Exit { kOk = 0, kUsage = 2, kData = 3, kNumerical = 4 };

/// "dir/name.ext" + ".suffix" -> "dir/name.suffix"
fs::path sibling(const fs::path& path, const std::string& suffix) {
    return path.parent_path() / (path.stem().string() + suffix);
}

fs::path with_suffix(const fs::path& prefix, const std::string& suffix) {
    return prefix.parent_path() / (prefix.filename().string() + suffix);
}

unsigned resolve_threads(unsigned flag) {
    if (flag > 0) return flag;
    if (const char* env = std::getenv("TOMOSAR_THREADS")) {
        char* end = nullptr;
        const long value = std::strtol(env, &end, 10);
        if (end != env && *end == '\0' && value > 0) return static_cast<unsigned>(value);
        throw ConfigError("TOMOSAR_THREADS must be a positive integer");
    }
    return default_thread_count();
}

RunConfig config_or_default(const std::string& path) {
    if (path.empty()) {
        RunConfig cfg;
        cfg.validate();
        return cfg;
    }
    return load_config(path);
}

void write_raster_outputs(const fs::path& path, const Raster<double>& raster, bool preview) {
    io::write_float_raster(path, raster);
    if (preview) io::write_pgm_preview(sibling(path, path.extension().string() + ".pgm"), raster);
}

struct SimulateArgs {
    std::string config, out;
    bool preview = false;
};

int run_simulate(const SimulateArgs& args) {
    const RunConfig cfg = config_or_default(args.config);
    const AcquisitionGeometry geom = cfg.geometry.resolve();
    const Raster<double> truth = generate_scene(cfg.scene);
    const double snr = cfg.noise.snr_db ? *cfg.noise.snr_db : kNoiseless;
    const InsarStack stack = simulate_stack(truth, geom, snr, cfg.noise.seed);

    const fs::path out = args.out;
    const fs::path truth_path = sibling(out, ".truth.hgt");
    const fs::path manifest_path = sibling(out, ".manifest.json");
    io::write_stack(out, stack);
    write_raster_outputs(truth_path, truth, args.preview);
    write_json(manifest_path, make_manifest("simulate", cfg, json::object(),
                                            {out.filename().string(), truth_path.filename().string()}));
    return kOk;
}

struct FilterArgs {
    std::string in, out, enl, config;
    std::optional<int> patch_radius, search_radius;
    std::optional<double> h;
    std::size_t tiles = 0;
    unsigned threads = 0;
    bool preview = false;
};

int run_filter(const FilterArgs& args) {
    RunConfig cfg = config_or_default(args.config);
    if (args.patch_radius) cfg.nonlocal.patch_radius = *args.patch_radius;
    if (args.search_radius) cfg.nonlocal.search_radius = *args.search_radius;
    if (args.h) cfg.nonlocal.h = *args.h;
    try {
        cfg.nonlocal.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }

    const InsarStack stack = io::read_stack(args.in);
    FilterOptions options;
    options.tile_size = args.tiles;
    options.threads = resolve_threads(args.threads);
    const FilterResult result = filter_stack(stack, cfg.nonlocal, options);

    const fs::path out = args.out;
    const fs::path enl_path = args.enl.empty() ? sibling(out, ".enl.hgt") : fs::path(args.enl);
    io::write_stack(out, result.filtered);
    write_raster_outputs(enl_path, result.field.enl, args.preview);
    // Tiling and thread count never change the output, so they are not part of the manifest.
    write_json(sibling(out, ".manifest.json"),
               make_manifest("filter", cfg, {{"input", args.in}},
                             {out.filename().string(), enl_path.filename().string()}));
    return kOk;
}

struct InvertArgs {
    std::string in, out, config;
    unsigned threads = 0;
    bool preview = false;
};

int run_invert(const InvertArgs& args) {
    const RunConfig cfg = config_or_default(args.config);
    const InsarStack stack = io::read_stack(args.in);
    if (!args.config.empty()) {
        if (cfg.geometry.resolve().size() != stack.acquisitions())
            throw DimensionError("stack has " + std::to_string(stack.acquisitions()) +
                                 " acquisitions but the configuration describes " +
                                 std::to_string(cfg.geometry.resolve().size()));
        if (cfg.scene.height != stack.rows() || cfg.scene.width != stack.cols())
            throw DimensionError("stack size does not match the configured scene");
    }

    const AcquisitionGeometry& geom = stack.geometry();
    const ElevationGrid grid = default_elevation_grid(geom, static_cast<int>(cfg.oversampling));
    const SteeringMatrix steering = build_steering_matrix(geom, grid);
    const ImageInversion inv = invert_image(stack, steering, cfg.pipeline, resolve_threads(args.threads));

    const fs::path prefix = args.out;
    const fs::path top = with_suffix(prefix, ".top.hgt");
    const fs::path ground = with_suffix(prefix, ".ground.hgt");
    const fs::path order = with_suffix(prefix, ".k.u8");
    const fs::path table = with_suffix(prefix, ".scatterers.csv");
    write_raster_outputs(top, inv.top_height, args.preview);
    write_raster_outputs(ground, inv.ground_height, args.preview);
    io::write_byte_raster(order, inv.order);
    io::write_scatterer_csv(table, inv, std::sin(geom.incidence_angle));
    write_json(with_suffix(prefix, ".manifest.json"),
               make_manifest("invert", cfg, {{"input", args.in}},
                             {top.filename().string(), ground.filename().string(), order.filename().string(),
                              table.filename().string()}));
    return kOk;
}

struct EvaluateArgs {
    std::string estimate, truth, scatterers, stack, config, out;
    std::optional<double> rho_s;
    std::optional<std::size_t> erosion, profile_row, profile_col;
};

int run_evaluate(const EvaluateArgs& args) {
    const RunConfig cfg = config_or_default(args.config);
    const Raster<double> estimate = io::read_float_raster(args.estimate);
    const Raster<double> truth = io::read_float_raster(args.truth);
    if (!estimate.same_shape(truth)) throw DimensionError("estimate and truth rasters differ in size");
    if (cfg.scene.height != truth.rows() || cfg.scene.width != truth.cols())
        throw DimensionError("truth raster does not match the configured scene size");

    const auto masks = scene_masks(cfg.scene, args.erosion.value_or(cfg.eval.erosion));
    const fs::path prefix = args.out;
    io::write_height_stats_csv(with_suffix(prefix, ".stats.csv"), height_stats(estimate, truth, masks));

    if (!args.scatterers.empty()) {
        double rho_s = 0.0;
        if (args.rho_s) {
            rho_s = *args.rho_s;
        } else if (!args.stack.empty()) {
            rho_s = rayleigh_resolution(io::read_stack(args.stack).geometry());
        } else {
            throw ConfigError("--scatterers needs --rho-s or --stack");
        }
        const auto pixels = io::read_scatterer_csv(args.scatterers, truth.rows(), truth.cols());
        io::write_histogram_csv(with_suffix(prefix, ".histogram.csv"),
                                separation_histogram(pixels, rho_s, cfg.eval.bin_width));
    }
    if (args.profile_row)
        io::write_profile_csv(with_suffix(prefix, ".profile.csv"),
                              profile_slice(estimate, truth, SliceAxis::Row, *args.profile_row));
    else if (args.profile_col)
        io::write_profile_csv(with_suffix(prefix, ".profile.csv"),
                              profile_slice(estimate, truth, SliceAxis::Column, *args.profile_col));
    return kOk;
}

int run_crlb(AccuracyQuery query, double snr_db) {
    query.snr = std::pow(10.0, snr_db / 10.0);
    try {
        query.validate();
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
    const double single = crlb_single(query);
    const double c0 = interference_factor(query.kappa, query.delta_phi);
    std::cout << io::format_number(single) << ',' << io::format_number(c0) << ',' << io::format_number(c0 * single)
              << '\n';
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SAR tomography with non-local filtering and compressive sensing"};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    SimulateArgs sim;
    auto* simulate = app.add_subcommand("simulate", "simulate a stack from a scene configuration");
    simulate->add_option("--config", sim.config, "run configuration or manifest (JSON); defaults when omitted");
    simulate->add_option("--out", sim.out, "output stack file")->required();
    simulate->add_flag("--preview", sim.preview, "also write PGM previews of rasters");

    FilterArgs flt;
    auto* filter = app.add_subcommand("filter", "non-local filtering of a stack");
    filter->add_option("--in", flt.in, "input stack file")->required();
    filter->add_option("--out", flt.out, "filtered stack file")->required();
    filter->add_option("--enl", flt.enl, "ENL raster (default: <out>.enl.hgt)");
    filter->add_option("--config", flt.config, "run configuration or manifest (nonlocal section used)");
    filter->add_option("--patch-radius", flt.patch_radius, "patch half-width");
    filter->add_option("--search-radius", flt.search_radius, "search window half-width");
    filter->add_option("--h-param", flt.h, "filtering parameter h");
    filter->add_option("--tiles", flt.tiles, "tile edge length in pixels (0: whole image)");
    filter->add_option("--threads", flt.threads, "worker threads (0: TOMOSAR_THREADS or all cores)");
    filter->add_flag("--preview", flt.preview, "also write a PGM preview of the ENL raster");

    InvertArgs inv;
    auto* invert = app.add_subcommand("invert", "per-pixel tomographic inversion");
    invert->add_option("--in", inv.in, "input stack file")->required();
    invert->add_option("--out", inv.out, "output prefix")->required();
    invert->add_option("--config", inv.config, "run configuration or manifest");
    invert->add_option("--threads", inv.threads, "worker threads (0: TOMOSAR_THREADS or all cores)");
    invert->add_flag("--preview", inv.preview, "also write PGM previews of the height rasters");

    EvaluateArgs ev;
    auto* evaluate = app.add_subcommand("evaluate", "height statistics and separation histogram");
    evaluate->add_option("--estimate", ev.estimate, "estimated height raster")->required();
    evaluate->add_option("--truth", ev.truth, "ground-truth height raster")->required();
    evaluate->add_option("--scatterers", ev.scatterers, "scatterer table for the separation histogram");
    evaluate->add_option("--rho-s", ev.rho_s, "Rayleigh resolution [m] for the histogram");
    evaluate->add_option("--stack", ev.stack, "stack file whose geometry gives the Rayleigh resolution");
    evaluate->add_option("--config", ev.config, "run configuration or manifest (scene and eval sections)");
    evaluate->add_option("--erosion", ev.erosion, "mask erosion in pixels");
    evaluate->add_option("--profile-row", ev.profile_row, "also write the profile along this row");
    evaluate->add_option("--profile-col", ev.profile_col, "also write the profile along this column");
    evaluate->add_option("--out", ev.out, "output prefix")->required();

    AccuracyQuery query;
    double snr_db = 10.0;
    auto* crlb = app.add_subcommand("crlb", "closed-form elevation accuracy");
    crlb->add_option("--wavelength", query.wavelength, "wavelength [m]")->capture_default_str();
    crlb->add_option("--range", query.range, "slant range [m]")->capture_default_str();
    crlb->add_option("--sigma-b", query.sigma_b, "baseline standard deviation [m]")->capture_default_str();
    crlb->add_option("--n", query.n, "number of acquisitions")->capture_default_str();
    crlb->add_option("--snr-db", snr_db, "signal-to-noise ratio [dB]")->capture_default_str();
    crlb->add_option("--kappa", query.kappa, "scatterer separation / Rayleigh resolution")->capture_default_str();
    crlb->add_option("--delta-phi", query.delta_phi, "phase difference [rad]")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kUsage;
    }

    try {
        if (*simulate) return run_simulate(sim);
        if (*filter) return run_filter(flt);
        if (*invert) return run_invert(inv);
        if (*evaluate) return run_evaluate(ev);
        if (*crlb) return run_crlb(query, snr_db);
    } catch (const ConfigError& e) {
        std::cerr << "tomosar: configuration error: " << e.what() << '\n';
        return kUsage;
    } catch (const InputError& e) {
        std::cerr << "tomosar: " << e.what() << '\n';
        return kUsage;
    } catch (const DomainError& e) {
        std::cerr << "tomosar: invalid parameter: " << e.what() << '\n';
        return kUsage;
    } catch (const NumericalError& e) {
        std::cerr << "tomosar: numerical failure: " << e.what() << '\n';
        return kNumerical;
    } catch (const std::exception& e) {
        std::cerr << "tomosar: " << e.what() << '\n';
        return kData;
    }
    return kUsage;
}
