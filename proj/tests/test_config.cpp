#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "tomosar/config.hpp"

namespace tomosar {
namespace {

using nlohmann::json;

TEST(Config, EmptyDocumentGivesDefaults) {
    const RunConfig cfg = parse_config(json::object());
    EXPECT_EQ(cfg.scene.width, 170u);
    EXPECT_EQ(cfg.scene.height, 200u);
    EXPECT_EQ(cfg.geometry.baseline_count, 29u);
    EXPECT_FALSE(cfg.noise.snr_db.has_value());
    EXPECT_EQ(cfg.nonlocal.patch_radius, 3);
    EXPECT_EQ(cfg.nonlocal.search_radius, 10);
    EXPECT_EQ(cfg.pipeline.k_max, 2u);
    EXPECT_EQ(cfg.oversampling, 4u);
    const auto geom = cfg.geometry.resolve();
    EXPECT_EQ(geom.baselines, baseline_distribution(29, 1, 100.0));
}

TEST(Config, ReadsValues) {
    const json doc = json::parse(R"({
        "geometry": {"baselines": [0, 50, -30, 80], "wavelength": 0.056},
        "noise": {"snr_db": -3, "seed": 9},
        "nonlocal": {"patch_radius": 2, "search_radius": 5, "h": 7.5},
        "solver": {"tolerance": 1e-6, "block_count": 4},
        "pipeline": {"k_max": 3, "oversampling": 2},
        "scene": {"width": 20, "height": 10, "rectangles": [{"origin_row": 1, "origin_col": 2, "rows": 3, "cols": 4, "height": 12}]}
    })");
    const RunConfig cfg = parse_config(doc);
    EXPECT_EQ(cfg.geometry.resolve().baselines, (std::vector<double>{0, 50, -30, 80}));
    EXPECT_EQ(cfg.geometry.wavelength, 0.056);
    EXPECT_EQ(*cfg.noise.snr_db, -3.0);
    EXPECT_EQ(cfg.noise.seed, 9u);
    EXPECT_EQ(cfg.nonlocal.h, 7.5);
    EXPECT_EQ(cfg.pipeline.solver.tolerance, 1e-6);
    EXPECT_EQ(cfg.pipeline.solver.block_count, 4u);
    EXPECT_EQ(cfg.pipeline.k_max, 3u);
    EXPECT_EQ(cfg.oversampling, 2u);
    ASSERT_EQ(cfg.scene.rectangles.size(), 1u);
    EXPECT_EQ(cfg.scene.rectangles[0].label, "shape1");
}

TEST(Config, RejectsUnknownKeysAndBadValues) {
    EXPECT_THROW(parse_config(json::parse(R"({"bogus": 1})")), ConfigError);
    EXPECT_THROW(parse_config(json::parse(R"({"noise": {"snr": 3}})")), ConfigError);
    EXPECT_THROW(parse_config(json::parse(R"({"noise": {"snr_db": "loud"}})")), ConfigError);
    EXPECT_THROW(parse_config(json::parse(R"({"nonlocal": {"h": -1}})")), ConfigError);
    EXPECT_THROW(parse_config(json::parse(R"({"scene": {"width": 5}})")), ConfigError);
    EXPECT_THROW(parse_config(json::parse(
                     R"({"scene": {"width": 5, "height": 5, "rectangles": [{"origin_row": 4, "origin_col": 0, "rows": 3, "cols": 1, "height": 1}]}})")),
                 ConfigError);
}

TEST(Config, ResolvedDocumentRoundTrips) {
    RunConfig cfg;
    cfg.noise.snr_db = 3.0;
    cfg.nonlocal.h = 6.0;
    const json doc = to_json(cfg);
    EXPECT_EQ(doc.at("geometry").at("baselines").size(), 29u);
    const RunConfig back = parse_config(doc);
    EXPECT_EQ(to_json(back), doc);
    EXPECT_EQ(back.geometry.resolve().baselines, cfg.geometry.resolve().baselines);
}

TEST(Config, ManifestAccepted) {
    RunConfig cfg;
    cfg.noise.snr_db = -8.0;
    const json manifest = make_manifest("simulate", cfg, json::object(), {"out.tstk"});
    EXPECT_EQ(manifest.at("manifest_version"), 1);
    EXPECT_EQ(manifest.at("tool_version"), kToolVersion);
    EXPECT_EQ(manifest.at("command"), "simulate");
    const RunConfig back = parse_config(manifest);
    EXPECT_EQ(*back.noise.snr_db, -8.0);
}

TEST(Config, LoadErrors) {
    const auto dir = std::filesystem::temp_directory_path() / "tomosar_config_test";
    std::filesystem::create_directories(dir);
    EXPECT_THROW(load_config(dir / "missing.json"), InputError);
    std::ofstream(dir / "bad.json") << "{ not json";
    EXPECT_THROW(load_config(dir / "bad.json"), ConfigError);
    write_json(dir / "good.json", to_json(RunConfig{}));
    EXPECT_NO_THROW(load_config(dir / "good.json"));
    std::filesystem::remove_all(dir);
}

}  // namespace
}  // namespace tomosar
