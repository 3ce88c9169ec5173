#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "tomosar/simulate.hpp"
#include "tomosar/slimmer.hpp"

namespace tomosar {
namespace {

using testing::point_targets;

struct Setup {
    AcquisitionGeometry geom;
    SteeringMatrix steering;
    double rho = 0.0;
};

Setup default_setup(std::size_t n = 29, int oversampling = 2) {
    Setup s;
    s.geom = testing::make_geometry(baseline_distribution(n, 1, 100.0));
    s.steering = build_steering_matrix(s.geom, default_elevation_grid(s.geom, oversampling));
    s.rho = rayleigh_resolution(s.geom);
    return s;
}

Eigen::VectorXcd with_noise(const Eigen::VectorXcd& g, double snr_db, std::uint64_t seed) {
    SplitMix64 rng(seed);
    const double sigma = std::sqrt(std::pow(10.0, -snr_db / 10.0) / 2.0);
    Eigen::VectorXcd out = g;
    for (Eigen::Index i = 0; i < g.size(); ++i) out[i] += sigma * Complex(rng.normal(), rng.normal());
    return out;
}

/// Criterion of one support computed with an SVD least-squares fit.
double brute_criterion(const Eigen::VectorXcd& g, const Eigen::MatrixXcd& A, const std::vector<std::size_t>& support,
                       double penalty) {
    const double N = static_cast<double>(g.size());
    double sigma2 = g.squaredNorm() / N;
    if (!support.empty()) {
        Eigen::MatrixXcd sub(A.rows(), static_cast<Eigen::Index>(support.size()));
        for (std::size_t k = 0; k < support.size(); ++k) sub.col(static_cast<Eigen::Index>(k)) = A.col(static_cast<Eigen::Index>(support[k]));
        const Eigen::VectorXcd amp = sub.jacobiSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(g);
        sigma2 = (g - sub * amp).squaredNorm() / N;
    }
    return 2.0 * N * std::log(std::numbers::pi * sigma2) + 2.0 * N +
           penalty * 3.0 * static_cast<double>(support.size()) * std::log(2.0 * N);
}

TEST(ScaleDown, Examples) {
    Eigen::VectorXcd gamma = Eigen::VectorXcd::Zero(10);
    gamma[2] = 1.0;
    gamma[6] = Complex(0.0, 0.5);
    gamma[8] = 0.1;
    EXPECT_EQ(scale_down(gamma, 0.2, 2), (std::vector<std::size_t>{2, 6}));
    EXPECT_EQ(scale_down(gamma, 0.05, 2), (std::vector<std::size_t>{2, 6, 8}));
    EXPECT_EQ(scale_down(gamma, 0.6, 2), (std::vector<std::size_t>{2}));
    EXPECT_TRUE(scale_down(Eigen::VectorXcd::Zero(5), 0.2, 2).empty());
}

TEST(ScaleDown, AdjacentRunsCollapseToPeak) {
    Eigen::VectorXcd gamma = Eigen::VectorXcd::Zero(12);
    gamma[3] = 0.5;
    gamma[4] = 0.9;
    gamma[5] = 0.6;
    gamma[9] = 1.0;
    EXPECT_EQ(scale_down(gamma, 0.2, 2), (std::vector<std::size_t>{4, 9}));
}

TEST(ScaleDown, CapKeepsStrongest) {
    Eigen::VectorXcd gamma = Eigen::VectorXcd::Zero(40);
    for (int i = 0; i < 10; ++i) gamma[4 * i] = 1.0 + 0.1 * i;
    // k_max = 1 keeps 4 candidates: the four largest, indices 24..36.
    EXPECT_EQ(scale_down(gamma, 0.2, 1), (std::vector<std::size_t>{24, 28, 32, 36}));
}

TEST(Debias, RecoversExactAmplitudes) {
    const auto s = default_setup();
    const std::vector<std::size_t> support{40, 95};
    Eigen::VectorXcd gamma = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(s.steering.cols()));
    gamma[40] = std::polar(1.0, 0.3);
    gamma[95] = std::polar(0.5, -1.2);
    const Eigen::VectorXcd g = forward_model(s.steering, gamma);
    const auto amp = debias(g, s.steering, support);
    EXPECT_NEAR(std::abs(amp[0] - gamma[40]), 0.0, 1e-10);
    EXPECT_NEAR(std::abs(amp[1] - gamma[95]), 0.0, 1e-10);
}

TEST(Debias, ResidualOrthogonalToSupport) {
    const auto s = default_setup();
    SplitMix64 rng(3);
    const Eigen::VectorXcd g = testing::random_vector(rng, 29);
    const std::vector<std::size_t> support{10, 50, 120};
    const auto amp = debias(g, s.steering, support);
    Eigen::VectorXcd residual = g;
    for (std::size_t k = 0; k < support.size(); ++k)
        residual -= amp[static_cast<Eigen::Index>(k)] * s.steering.entries.col(static_cast<Eigen::Index>(support[k]));
    for (std::size_t idx : support)
        EXPECT_NEAR(std::abs(s.steering.entries.col(static_cast<Eigen::Index>(idx)).dot(residual)), 0.0, 1e-9);
}

TEST(Debias, SingularSupportThrows) {
    const auto s = default_setup();
    SplitMix64 rng(4);
    const Eigen::VectorXcd g = testing::random_vector(rng, 29);
    EXPECT_THROW(debias(g, s.steering, {7, 7}), NumericalError);
    EXPECT_THROW(debias(Eigen::VectorXcd::Zero(5), s.steering, {7}), DimensionError);
    EXPECT_EQ(debias(g, s.steering, {}).size(), 0);
}

TEST(ModelSelection, MatchesBruteForce) {
    const auto s = default_setup(20, 2);
    SplitMix64 rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const double s1 = s.rho * (2.0 * rng.uniform() - 1.0);
        const double s2 = s1 + s.rho * (0.5 + 2.0 * rng.uniform());
        const std::vector<double> elev = trial % 3 == 0 ? std::vector<double>{s1} : std::vector<double>{s1, s2};
        const std::vector<Complex> amps{std::polar(1.0, rng.uniform()), std::polar(0.7, 2.0 * rng.uniform())};
        const Eigen::VectorXcd g = with_noise(point_targets(s.geom, elev, amps), 5.0, 100 + trial);
        std::vector<std::size_t> candidates;
        for (double e : elev) candidates.push_back(s.steering.grid.nearest(e));
        candidates.push_back(s.steering.grid.nearest(s1 - 1.3 * s.rho));
        candidates.push_back(s.steering.grid.nearest(s2 + 1.1 * s.rho));
        std::sort(candidates.begin(), candidates.end());
        candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

        // Every subset of size <= 2 by bitmask.
        std::vector<std::size_t> best_support;
        double best = brute_criterion(g, s.steering.entries, {}, 1.0);
        const std::size_t m = candidates.size();
        for (std::size_t mask = 1; mask < (1u << m); ++mask) {
            std::vector<std::size_t> support;
            for (std::size_t i = 0; i < m; ++i)
                if (mask & (1u << i)) support.push_back(candidates[i]);
            if (support.size() > 2) continue;
            const double value = brute_criterion(g, s.steering.entries, support, 1.0);
            if (value < best - 1e-9 || (std::abs(value - best) <= 1e-9 && support.size() < best_support.size())) {
                best = value;
                best_support = support;
            }
        }
        const auto sel = model_order_selection(g, s.steering, candidates, 2);
        EXPECT_EQ(sel.support, best_support) << "trial " << trial;
        EXPECT_NEAR(sel.criterion, best, 1e-8 * std::abs(best));
    }
}

TEST(ModelSelection, NoiseOnlyPicksZero) {
    const auto s = default_setup();
    SplitMix64 rng(6);
    int zero = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const Eigen::VectorXcd g = testing::random_vector(rng, 29);
        const auto sel = model_order_selection(g, s.steering, {20, 60, 100, 140}, 2);
        if (sel.order == 0) ++zero;
    }
    EXPECT_GE(zero, 45);
}

TEST(ModelSelection, StrongSingleScatterer) {
    const auto s = default_setup();
    const std::size_t idx = s.steering.grid.nearest(0.3 * s.rho);
    const Eigen::VectorXcd g = with_noise(point_targets(s.geom, {s.steering.grid[idx]}, {1.0}), 20.0, 7);
    const auto sel = model_order_selection(g, s.steering, {idx, idx + 30, idx + 60}, 2);
    EXPECT_EQ(sel.order, 1u);
    EXPECT_EQ(sel.support, (std::vector<std::size_t>{idx}));
}

TEST(ModelSelection, PenaltyMonotone) {
    const auto s = default_setup();
    SplitMix64 rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const Eigen::VectorXcd g = with_noise(point_targets(s.geom, {0.0, 1.2 * s.rho}, {1.0, 0.4}), 3.0, 200 + trial);
        const std::vector<std::size_t> cand{s.steering.grid.nearest(0.0), s.steering.grid.nearest(1.2 * s.rho),
                                            s.steering.grid.nearest(2.5 * s.rho)};
        std::size_t previous = 3;
        for (double penalty : {0.0, 0.5, 1.0, 2.0, 4.0}) {
            const auto sel = model_order_selection(g, s.steering, cand, 2, penalty);
            EXPECT_LE(sel.order, previous);
            previous = sel.order;
        }
    }
}

TEST(InvertPixel, NoiselessSingleScatterer) {
    const auto s = default_setup(29, 4);
    const std::size_t idx = s.steering.grid.nearest(40.0);
    const double elevation = s.steering.grid[idx];
    const Complex amp = std::polar(1.0, 0.8);
    const auto result = invert_pixel(point_targets(s.geom, {elevation}, {amp}), s.steering, PipelineOptions{});
    ASSERT_EQ(result.order(), 1u);
    EXPECT_EQ(result.scatterers[0].grid_index, idx);
    EXPECT_NEAR(result.scatterers[0].elevation, elevation, 1e-12);
    EXPECT_NEAR(std::abs(result.scatterers[0].amplitude - amp), 0.0, 1e-8);
}

TEST(InvertPixel, ZeroMeasurement) {
    const auto s = default_setup();
    const auto result = invert_pixel(Eigen::VectorXcd::Zero(29), s.steering, PipelineOptions{});
    EXPECT_EQ(result.order(), 0u);
    EXPECT_THROW(invert_pixel(Eigen::VectorXcd::Zero(5), s.steering, PipelineOptions{}), DimensionError);
}

TEST(InvertPixel, CommonPhaseRotationOnlyRotatesAmplitudes) {
    const auto s = default_setup();
    const Eigen::VectorXcd g = with_noise(point_targets(s.geom, {5.0, 50.0}, {1.0, 0.8}), 10.0, 9);
    const Complex rot = std::polar(1.0, 1.1);
    const auto a = invert_pixel(g, s.steering, PipelineOptions{});
    const auto b = invert_pixel(Eigen::VectorXcd(rot * g), s.steering, PipelineOptions{});
    ASSERT_EQ(a.order(), b.order());
    for (std::size_t k = 0; k < a.order(); ++k) {
        EXPECT_EQ(a.scatterers[k].grid_index, b.scatterers[k].grid_index);
        EXPECT_NEAR(std::abs(rot * a.scatterers[k].amplitude - b.scatterers[k].amplitude), 0.0, 1e-3);
    }
}

TEST(InvertPixel, ResolvedPairAtHighSnr) {
    const auto s = default_setup(29, 4);
    const double s1 = s.steering.grid[s.steering.grid.nearest(0.0)];
    const double s2 = s.steering.grid[s.steering.grid.nearest(1.5 * s.rho)];
    const Eigen::VectorXcd g = with_noise(point_targets(s.geom, {s1, s2}, {1.0, 0.8}), 20.0, 10);
    const auto result = invert_pixel(g, s.steering, PipelineOptions{});
    ASSERT_EQ(result.order(), 2u);
    EXPECT_NEAR(result.scatterers[0].elevation, s1, 0.1 * s.rho);
    EXPECT_NEAR(result.scatterers[1].elevation, s2, 0.1 * s.rho);
}

TEST(ScaleDown, PeaksTenCellsApartRetained) {
    Eigen::VectorXcd gamma = Eigen::VectorXcd::Zero(40);
    gamma[12] = 1.0;
    gamma[22] = 0.5;
    EXPECT_EQ(scale_down(gamma, 0.2, 2), (std::vector<std::size_t>{12, 22}));
}

TEST(Debias, SingleColumnIsMatchedFilter) {
    const auto s = default_setup();
    SplitMix64 rng(12);
    const Eigen::VectorXcd g = testing::random_vector(rng, 29);
    const auto amp = debias(g, s.steering, {33});
    EXPECT_NEAR(std::abs(amp[0] - s.steering.entries.col(33).dot(g) / 29.0), 0.0, 1e-12);
}

TEST(InvertPixel, PureNoiseMostlyEmpty) {
    const auto s = default_setup(29, 4);
    const PipelineOptions options;
    const auto plan = make_block_plan(s.steering.entries, 0);
    int empty = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::VectorXcd g = with_noise(Eigen::VectorXcd::Zero(29), -10.0, 1000 + trial);
        if (invert_pixel(g, s.steering, options, plan, trial).order() == 0) ++empty;
    }
    EXPECT_GE(empty, 80);
}

TEST(InvertPixel, PairAtTwoRayleighDetected) {
    const auto s = default_setup(29, 4);
    const PipelineOptions options;
    const auto plan = make_block_plan(s.steering.entries, 0);
    SplitMix64 rng(13);
    int doubles = 0;
    for (int trial = 0; trial < 50; ++trial) {
        const double s1 = s.rho * (rng.uniform() - 0.5);
        const std::vector<Complex> amps{std::polar(1.0, 6.0 * rng.uniform()), std::polar(1.0, 6.0 * rng.uniform())};
        const Eigen::VectorXcd g = with_noise(point_targets(s.geom, {s1, s1 + 2.0 * s.rho}, amps), 10.0, 2000 + trial);
        if (invert_pixel(g, s.steering, options, plan, trial).order() == 2) ++doubles;
    }
    EXPECT_GE(doubles, 45);
}

TEST(InvertPixel, NoiselessPairsGridExact) {
    const auto s = default_setup(29, 4);
    SplitMix64 rng(14);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t i1 = s.steering.grid.nearest(s.rho * (2.0 * rng.uniform() - 1.0));
        const std::size_t i2 = s.steering.grid.nearest(s.steering.grid[i1] + s.rho * (2.0 + 1.5 * rng.uniform()));
        const std::vector<Complex> amps{std::polar(1.0, 6.0 * rng.uniform()), std::polar(0.6, 6.0 * rng.uniform())};
        const Eigen::VectorXcd g = point_targets(s.geom, {s.steering.grid[i1], s.steering.grid[i2]}, amps);
        const auto result = invert_pixel(g, s.steering, PipelineOptions{});
        ASSERT_EQ(result.order(), 2u) << "trial " << trial;
        EXPECT_EQ(result.scatterers[0].grid_index, i1);
        EXPECT_EQ(result.scatterers[1].grid_index, i2);
        EXPECT_NEAR(std::abs(result.scatterers[0].amplitude - amps[0]), 0.0, 1e-8);
        EXPECT_NEAR(std::abs(result.scatterers[1].amplitude - amps[1]), 0.0, 1e-8);
    }
}

TEST(PipelineOptions, Validation) {
    PipelineOptions o;
    o.support_threshold = 0.0;
    EXPECT_THROW(o.validate(), DomainError);
    o = {};
    o.lambda_factor = -1.0;
    EXPECT_THROW(o.validate(), DomainError);
    o = {};
    o.penalty_weight = -0.5;
    EXPECT_THROW(o.validate(), DomainError);
}

TEST(InvertImage, ThreadCountIndependent) {
    const auto geom = testing::make_geometry(baseline_distribution(12, 2, 100.0));
    Raster<double> heights(6, 5, 0.0);
    for (std::size_t r = 0; r < 6; ++r)
        for (std::size_t c = 0; c < 5; ++c) heights(r, c) = 3.0 * static_cast<double>(r + c);
    const auto stack = simulate_stack(heights, geom, 5.0, 3);
    const auto steering = build_steering_matrix(geom, default_elevation_grid(geom, 2));
    const auto one = invert_image(stack, steering, PipelineOptions{}, 1);
    const auto three = invert_image(stack, steering, PipelineOptions{}, 3);
    EXPECT_EQ(one.order.data(), three.order.data());
    for (std::size_t i = 0; i < one.pixels.size(); ++i) {
        ASSERT_EQ(one.pixels[i].order(), three.pixels[i].order());
        for (std::size_t k = 0; k < one.pixels[i].order(); ++k)
            EXPECT_EQ(one.pixels[i].scatterers[k].amplitude, three.pixels[i].scatterers[k].amplitude);
    }
}

TEST(InvertImage, HeightMapsFollowOrder) {
    const auto geom = testing::make_geometry(baseline_distribution(12, 2, 100.0));
    Raster<double> heights(4, 4, 10.0);
    const auto stack = simulate_stack(heights, geom, kNoiseless, 0);
    const auto steering = build_steering_matrix(geom, default_elevation_grid(geom, 4));
    const auto inv = invert_image(stack, steering, PipelineOptions{});
    const double sin_inc = std::sin(geom.incidence_angle);
    for (std::size_t r = 0; r < 4; ++r)
        for (std::size_t c = 0; c < 4; ++c) {
            const auto& set = inv.at(r, c);
            EXPECT_EQ(inv.order(r, c), set.order());
            ASSERT_GE(set.order(), 1u);
            EXPECT_DOUBLE_EQ(inv.top_height(r, c), set.scatterers.back().elevation * sin_inc);
            EXPECT_NEAR(inv.top_height(r, c), 10.0, steering.grid.spacing() * sin_inc);
            if (set.order() < 2) EXPECT_TRUE(std::isnan(inv.ground_height(r, c)));
        }
}

}  // namespace
}  // namespace tomosar
