#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "test_util.hpp"
#include "tomosar/simulate.hpp"
#include "tomosar/solver.hpp"

namespace tomosar {
namespace {

using testing::random_matrix;
using testing::random_vector;

double naive_objective(const Eigen::MatrixXcd& A, const Eigen::VectorXcd& g, double lambda, const Eigen::VectorXcd& x) {
    double fit = 0.0;
    for (Eigen::Index n = 0; n < A.rows(); ++n) {
        Complex r = -g[n];
        for (Eigen::Index l = 0; l < A.cols(); ++l) r += A(n, l) * x[l];
        fit += std::norm(r);
    }
    double l1 = 0.0;
    for (Eigen::Index l = 0; l < x.size(); ++l) l1 += std::abs(x[l]);
    return fit + lambda * l1;
}

struct Instance {
    Eigen::MatrixXcd A;
    Eigen::VectorXcd g;
};

Instance random_instance(std::uint64_t seed, Eigen::Index rows = 25, Eigen::Index cols = 100) {
    SplitMix64 rng(seed);
    Instance inst{random_matrix(rng, rows, cols), Eigen::VectorXcd()};
    inst.g = random_vector(rng, rows);
    return inst;
}

double correlation_peak(const Instance& inst) { return (inst.A.adjoint() * inst.g).cwiseAbs().maxCoeff(); }

TEST(Objective, ZeroGammaGivesRhsEnergy) {
    const auto inst = random_instance(1, 6, 10);
    const L1LsProblem problem(inst.A, inst.g, 0.7);
    EXPECT_DOUBLE_EQ(objective(problem, Eigen::VectorXcd::Zero(10)), inst.g.squaredNorm());
}

TEST(Objective, ExactSolutionHasNoResidual) {
    SplitMix64 rng(2);
    const Eigen::MatrixXcd A = random_matrix(rng, 6, 10);
    const Eigen::VectorXcd x = random_vector(rng, 10);
    const Eigen::VectorXcd g = A * x;
    const L1LsProblem problem(A, g, 0.0);
    EXPECT_NEAR(objective(problem, x), 0.0, 1e-20 + 1e-24 * g.squaredNorm());
}

TEST(Objective, MatchesNaiveLoops) {
    SplitMix64 rng(3);
    const auto inst = random_instance(3, 7, 12);
    const Eigen::VectorXcd x = random_vector(rng, 12);
    const L1LsProblem problem(inst.A, inst.g, 1.3);
    EXPECT_NEAR(objective(problem, x), naive_objective(inst.A, inst.g, 1.3, x), 1e-10);
}

TEST(Problem, RejectsBadInput) {
    const auto inst = random_instance(4, 5, 8);
    EXPECT_THROW(L1LsProblem(inst.A, Eigen::VectorXcd::Zero(4), 1.0), DimensionError);
    EXPECT_THROW(L1LsProblem(inst.A, inst.g, -1.0), DomainError);
    const L1LsProblem problem(inst.A, inst.g, 1.0);
    EXPECT_THROW(objective(problem, Eigen::VectorXcd::Zero(7)), DimensionError);
}

TEST(Gradient, ZeroAtExactSolution) {
    SplitMix64 rng(5);
    const Eigen::MatrixXcd A = random_matrix(rng, 6, 10);
    const Eigen::VectorXcd x = random_vector(rng, 10);
    const Eigen::VectorXcd g = A * x;
    const L1LsProblem problem(A, g, 0.0);
    EXPECT_LE(gradient(problem, x).norm(), 1e-12);
}

TEST(Gradient, UnitVectorWithZeroRhs) {
    SplitMix64 rng(6);
    const Eigen::MatrixXcd A = random_matrix(rng, 6, 10);
    const L1LsProblem problem(A, Eigen::VectorXcd::Zero(6), 0.0);
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(10);
    e[4] = 1.0;
    const Eigen::VectorXcd expected = 2.0 * A.adjoint() * A.col(4);
    EXPECT_LE((gradient(problem, e) - expected).norm(), 1e-12);
}

TEST(Gradient, MatchesCentralDifferences) {
    SplitMix64 rng(7);
    const auto inst = random_instance(7, 8, 15);
    const L1LsProblem problem(inst.A, inst.g, 0.0);
    const Eigen::VectorXcd x = random_vector(rng, 15);
    const Eigen::VectorXcd grad = gradient(problem, x);
    for (int trial = 0; trial < 5; ++trial) {
        const Eigen::VectorXcd d = random_vector(rng, 15);
        const double eps = 1e-6;
        const double fd = (objective(problem, x + eps * d) - objective(problem, x - eps * d)) / (2.0 * eps);
        const double analytic = std::real(grad.dot(d));
        EXPECT_NEAR(fd, analytic, 1e-5 * std::abs(analytic));
    }
}

TEST(SoftThreshold, Examples) {
    const Complex y = soft_threshold(Complex(3.0, 4.0), 2.0);
    EXPECT_NEAR(y.real(), 1.8, 1e-15);
    EXPECT_NEAR(y.imag(), 2.4, 1e-15);
    EXPECT_EQ(soft_threshold(Complex(0.3, -0.4), 0.5), Complex(0.0, 0.0));
    EXPECT_EQ(soft_threshold(Complex(0.3, -0.4), 0.7), Complex(0.0, 0.0));
    EXPECT_EQ(soft_threshold(Complex(0.3, -0.4), 0.0), Complex(0.3, -0.4));
    EXPECT_EQ(soft_threshold(Complex(0.0, 0.0), 0.0), Complex(0.0, 0.0));
}

TEST(SoftThreshold, IsProximalOperatorByGridSearch) {
    SplitMix64 rng(9);
    for (int trial = 0; trial < 20; ++trial) {
        const Complex x(2.0 * rng.normal(), 2.0 * rng.normal());
        const double tau = 1.5 * rng.uniform();
        auto cost = [&](Complex u) { return 0.5 * std::norm(u - x) + tau * std::abs(u); };
        // Coarse-to-fine grid search over the complex plane around x.
        Complex best = x;
        double half = std::abs(x) + 1.0;
        for (int level = 0; level < 6; ++level) {
            const Complex centre = best;
            const double step = half / 50.0;
            for (int i = -50; i <= 50; ++i)
                for (int j = -50; j <= 50; ++j) {
                    const Complex u = centre + Complex(i * step, j * step);
                    if (cost(u) < cost(best)) best = u;
                }
            half = 4.0 * step;
        }
        const Complex prox = soft_threshold(x, tau);
        EXPECT_LE(cost(prox), cost(best) + 1e-12);
        EXPECT_NEAR(std::abs(prox - best), 0.0, 1e-4);
    }
}

TEST(Lipschitz, SingleSteeringColumn) {
    const auto geom = testing::make_geometry(baseline_distribution(29, 1, 100.0));
    const auto steering = build_steering_matrix(geom, default_elevation_grid(geom, 1));
    EXPECT_NEAR(lipschitz_block(steering.entries, 17, 1), 2.0 * 29.0, 1e-9);
}

TEST(Lipschitz, OrthogonalPair) {
    // Two orthogonal columns of norm sqrt(N): sigma_max^2 = N.
    const int N = 8;
    Eigen::MatrixXcd A(N, 2);
    for (int n = 0; n < N; ++n) {
        A(n, 0) = std::polar(1.0, 0.0);
        A(n, 1) = std::polar(1.0, 2.0 * std::numbers::pi * n / N);
    }
    EXPECT_NEAR(std::abs(A.col(0).dot(A.col(1))), 0.0, 1e-12);
    EXPECT_NEAR(lipschitz_block(A, 0, 2), 2.0 * N, 1e-9);
}

TEST(Lipschitz, MatchesDenseSvd) {
    const auto inst = random_instance(10, 12, 30);
    const Eigen::JacobiSVD<Eigen::MatrixXcd> svd(inst.A);
    const double sigma = svd.singularValues()[0];
    EXPECT_NEAR(lipschitz_block(inst.A, 0, 30), 2.0 * sigma * sigma, 1e-5 * 2.0 * sigma * sigma);
    const Eigen::JacobiSVD<Eigen::MatrixXcd> block_svd(inst.A.middleCols(5, 9));
    const double sb = block_svd.singularValues()[0];
    EXPECT_NEAR(lipschitz_block(inst.A, 5, 9), 2.0 * sb * sb, 1e-5 * 2.0 * sb * sb);
}

TEST(Lipschitz, RejectsBadBlocks) {
    const auto inst = random_instance(11, 4, 6);
    EXPECT_THROW(lipschitz_block(inst.A, 0, 0), DomainError);
    EXPECT_THROW(lipschitz_block(inst.A, 4, 3), DimensionError);
}

TEST(BlockProbabilities, Examples) {
    const std::vector<double> equal{2.0, 2.0, 2.0, 2.0};
    for (double p : block_probabilities(equal)) EXPECT_DOUBLE_EQ(p, 0.25);
    const std::vector<double> skew{1.0, 3.0};
    const auto p = block_probabilities(skew);
    EXPECT_DOUBLE_EQ(p[0], 0.25);
    EXPECT_DOUBLE_EQ(p[1], 0.75);
    const std::vector<double> bad{1.0, 0.0};
    EXPECT_THROW(block_probabilities(bad), DomainError);
}

TEST(BlockSampler, FrequenciesConverge) {
    const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
    BlockSampler sampler(p, 123);
    std::vector<double> counts(4, 0.0);
    const int draws = 100000;
    for (int i = 0; i < draws; ++i) counts[sampler.next()] += 1.0;
    for (std::size_t j = 0; j < 4; ++j) EXPECT_NEAR(counts[j] / draws, p[j], 0.02 * p[j]);
}

TEST(BlockPlan, ContiguousCoverDefaultCount) {
    const auto inst = random_instance(12, 10, 100);
    const auto plan = make_block_plan(inst.A, 0);
    EXPECT_EQ(plan.size(), 100u / 16u);
    std::size_t next = 0;
    for (std::size_t j = 0; j < plan.size(); ++j) {
        EXPECT_EQ(plan.first[j], next);
        next += plan.count[j];
    }
    EXPECT_EQ(next, 100u);
    EXPECT_THROW(make_block_plan(inst.A, 101), DomainError);
}

TEST(Rbpg, NullSolutionAtThreshold) {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        const auto inst = random_instance(100 + seed);
        const L1LsProblem problem(inst.A, inst.g, 2.0 * correlation_peak(inst));
        SolverOptions options;
        options.seed = seed;
        const auto report = rbpg_solve(problem, options);
        EXPECT_EQ(report.solution.cwiseAbs().maxCoeff(), 0.0);
        EXPECT_TRUE(report.converged);
        EXPECT_EQ(reference_solve(problem, 1e-10).solution.cwiseAbs().maxCoeff(), 0.0);
    }
}

TEST(Rbpg, NonzeroJustBelowThreshold) {
    const auto inst = random_instance(150);
    const L1LsProblem problem(inst.A, inst.g, 0.999 * 2.0 * correlation_peak(inst));
    EXPECT_GT(rbpg_solve(problem, SolverOptions{}).solution.cwiseAbs().maxCoeff(), 0.0);
}

TEST(Rbpg, MatchesReferenceObjective) {
    for (std::uint64_t seed = 0; seed < 3; ++seed) {
        const auto inst = random_instance(200 + seed);
        const L1LsProblem problem(inst.A, inst.g, 0.1 * correlation_peak(inst));
        const auto ref = reference_solve(problem, 1e-10);
        SolverOptions options;
        options.seed = seed;
        const auto report = rbpg_solve(problem, options);
        const double f_ref = objective(problem, ref.solution);
        EXPECT_LE(std::abs(objective(problem, report.solution) - f_ref), 1e-4 * f_ref);
        EXPECT_TRUE(report.converged);
    }
}

TEST(Rbpg, CertificateAtConvergence) {
    const auto inst = random_instance(300);
    const L1LsProblem problem(inst.A, inst.g, 0.1 * correlation_peak(inst));
    SolverOptions options;
    options.tolerance = 1e-10;
    const auto report = rbpg_solve(problem, options);
    EXPECT_LE(optimality_residual(problem, report.solution), 1e-3 * problem.lambda());
}

TEST(Rbpg, FixedSeedIsBitIdentical) {
    const auto inst = random_instance(400);
    const L1LsProblem problem(inst.A, inst.g, 0.1 * correlation_peak(inst));
    SolverOptions options;
    options.seed = 77;
    const auto a = rbpg_solve(problem, options);
    const auto b = rbpg_solve(problem, options);
    EXPECT_EQ(a.solution, b.solution);
    EXPECT_EQ(a.objective_trace, b.objective_trace);
}

TEST(Rbpg, MedianOverSeedsNotAboveReference) {
    const auto inst = random_instance(500);
    const L1LsProblem problem(inst.A, inst.g, 0.1 * correlation_peak(inst));
    const double f_ref = objective(problem, reference_solve(problem, 1e-10).solution);
    std::vector<double> finals;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        SolverOptions options;
        options.seed = seed;
        finals.push_back(objective(problem, rbpg_solve(problem, options).solution));
    }
    std::nth_element(finals.begin(), finals.begin() + 10, finals.end());
    EXPECT_LE(finals[10], f_ref * (1.0 + 1e-4));
}

TEST(Rbpg, WithoutAccelerationAndSingleBlock) {
    const auto inst = random_instance(600);
    const L1LsProblem problem(inst.A, inst.g, 0.1 * correlation_peak(inst));
    const double f_ref = objective(problem, reference_solve(problem, 1e-10).solution);
    SolverOptions options;
    options.accelerate = false;
    options.block_count = 1;
    const auto report = rbpg_solve(problem, options);
    EXPECT_LE(objective(problem, report.solution), f_ref * (1.0 + 1e-4));
}

TEST(Rbpg, NoiselessOnGridScatterer) {
    const auto geom = testing::make_geometry(baseline_distribution(29, 3, 100.0));
    const double rho = rayleigh_resolution(geom);
    // Two cells per Rayleigh resolution on a wide grid keeps the columns weakly coherent.
    const auto grid = ElevationGrid::uniform(-10.0 * rho, 10.0 * rho, 41);
    const auto steering = build_steering_matrix(geom, grid);
    Eigen::VectorXcd gamma = Eigen::VectorXcd::Zero(41);
    const Complex amplitude = std::polar(1.0, 0.6);
    gamma[27] = amplitude;
    const Eigen::VectorXcd g = steering.entries * gamma;
    const L1LsProblem problem(steering.entries, g, 0.05 * (steering.entries.adjoint() * g).cwiseAbs().maxCoeff());
    SolverOptions options;
    const auto report = rbpg_solve(problem, options);
    Eigen::Index peak = 0;
    report.solution.cwiseAbs().maxCoeff(&peak);
    EXPECT_EQ(peak, 27);
    EXPECT_NEAR(std::abs(report.solution[27] - amplitude), 0.0, 0.05);
}

TEST(Rbpg, WarmStartFromOptimumStaysThere) {
    const auto inst = random_instance(700);
    const L1LsProblem problem(inst.A, inst.g, 0.1 * correlation_peak(inst));
    const auto ref = reference_solve(problem, 1e-12);
    const auto plan = make_block_plan(inst.A, 0);
    SolverOptions options;
    const auto report = rbpg_solve(problem, options, plan, ref.solution);
    EXPECT_LE(objective(problem, report.solution), objective(problem, ref.solution) * (1.0 + 1e-9));
    EXPECT_THROW(rbpg_solve(problem, options, plan, Eigen::VectorXcd::Zero(3)), DimensionError);
}

TEST(Rbpg, OptionValidation) {
    const auto inst = random_instance(800, 5, 8);
    const L1LsProblem problem(inst.A, inst.g, 0.1);
    SolverOptions options;
    options.block_count = 9;
    EXPECT_THROW(rbpg_solve(problem, options), DomainError);
    options = {};
    options.shrink = 1.0;
    EXPECT_THROW(rbpg_solve(problem, options), DomainError);
    options = {};
    options.tolerance = 0.0;
    EXPECT_THROW(rbpg_solve(problem, options), DomainError);
}

TEST(Reference, TraceIsNonIncreasing) {
    const auto inst = random_instance(900);
    const L1LsProblem problem(inst.A, inst.g, 0.1 * correlation_peak(inst));
    const auto report = reference_solve(problem, 1e-10);
    for (std::size_t i = 1; i < report.objective_trace.size(); ++i)
        EXPECT_LE(report.objective_trace[i], report.objective_trace[i - 1]);
    EXPECT_LE(optimality_residual(problem, report.solution), 1e-3 * problem.lambda());
}

TEST(Reference, LeastSquaresWhenLambdaZero) {
    SplitMix64 rng(901);
    Eigen::MatrixXcd A = random_matrix(rng, 6, 6) + 3.0 * Eigen::MatrixXcd::Identity(6, 6);
    const Eigen::VectorXcd g = random_vector(rng, 6);
    const L1LsProblem problem(A, g, 0.0);
    const auto report = reference_solve(problem, 1e-14);
    const Eigen::VectorXcd exact = A.colPivHouseholderQr().solve(g);
    EXPECT_LE((report.solution - exact).norm(), 1e-6 * exact.norm());
}

TEST(Reference, ZeroRhsWithoutIterating) {
    const auto inst = random_instance(902, 5, 9);
    const L1LsProblem problem(inst.A, Eigen::VectorXcd::Zero(5), 0.5);
    const auto report = reference_solve(problem, 1e-10);
    EXPECT_EQ(report.iterations, 0u);
    EXPECT_TRUE(report.converged);
    EXPECT_EQ(report.solution.norm(), 0.0);
}

TEST(Reference, IterationCapThrows) {
    const auto inst = random_instance(903);
    const L1LsProblem problem(inst.A, inst.g, 0.01 * correlation_peak(inst));
    EXPECT_THROW(reference_solve(problem, 1e-14, 3), NumericalError);
}

TEST(Certificate, ZeroAtKnownMinimiser) {
    // lambda above the null threshold: gamma = 0 is optimal.
    const auto inst = random_instance(904, 6, 12);
    const L1LsProblem problem(inst.A, inst.g, 2.0 * correlation_peak(inst));
    EXPECT_EQ(optimality_residual(problem, Eigen::VectorXcd::Zero(12)), 0.0);
    const L1LsProblem tight(inst.A, inst.g, 0.5 * correlation_peak(inst));
    EXPECT_GT(optimality_residual(tight, Eigen::VectorXcd::Zero(12)), 0.0);
}

}  // namespace
}  // namespace tomosar
