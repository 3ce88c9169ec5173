#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "tomosar/rng.hpp"
#include "tomosar/types.hpp"

namespace tomosar {

/// min_gamma ||A gamma - g||_2^2 + lambda * sum_l |gamma_l|  over complex gamma.
/// The matrix is referenced, not copied; it must outlive the problem.
class L1LsProblem {
public:
    L1LsProblem(const Eigen::MatrixXcd& matrix, Eigen::VectorXcd rhs, double lambda);

    const Eigen::MatrixXcd& matrix() const { return *matrix_; }
    const Eigen::VectorXcd& rhs() const { return rhs_; }
    double lambda() const { return lambda_; }
    std::size_t unknowns() const { return static_cast<std::size_t>(matrix_->cols()); }

private:
    const Eigen::MatrixXcd* matrix_;
    Eigen::VectorXcd rhs_;
    double lambda_;
};

struct SolverOptions {
    std::size_t block_count = 0;       // 0: max(1, L / 16)
    std::size_t max_iterations = 5000; // epochs (rbpg) or full steps (reference)
    double tolerance = 1e-8;           // relative objective change
    std::uint64_t seed = 0;
    double shrink = 0.5;               // backtracking factor in (0, 1)
    double initial_step = 0.0;         // 0: 1 / L_block
    bool accelerate = true;

    void validate(std::size_t unknowns) const;
};

struct SolverReport {
    Eigen::VectorXcd solution;
    std::vector<double> objective_trace;   // objective at start and after every accepted iteration
    std::size_t iterations = 0;
    bool converged = false;
};

double objective(const L1LsProblem& problem, const Eigen::VectorXcd& gamma);

/// Wirtinger gradient of ||A gamma - g||^2: 2 A^H (A gamma - g).
Eigen::VectorXcd gradient(const L1LsProblem& problem, const Eigen::VectorXcd& gamma);

/// Proximal operator of tau |.| on C: x * max(1 - tau/|x|, 0).
Complex soft_threshold(Complex x, double tau);

/// 2 * sigma_max(A[:, first:first+count])^2 by power iteration (1e-6 relative or better).
/// Throws NumericalError if the iteration does not settle.
double lipschitz_block(const Eigen::MatrixXcd& matrix, std::size_t first, std::size_t count);

/// P_j = L_j / sum L. Throws DomainError unless every constant is positive.
std::vector<double> block_probabilities(std::span<const double> lipschitz);

/// Draws block indices i.i.d. from a probability vector by inverse CDF on SplitMix64.
class BlockSampler {
public:
    BlockSampler(std::span<const double> probabilities, std::uint64_t seed);
    std::size_t next();

private:
    std::vector<double> cumulative_;
    SplitMix64 rng_;
};

/// Contiguous equal-size column blocks with their Lipschitz constants and sampling
/// probabilities. Depends only on the matrix, so it can be shared by every pixel.
struct BlockPlan {
    std::vector<std::size_t> first;
    std::vector<std::size_t> count;
    std::vector<double> lipschitz;
    std::vector<double> probabilities;

    std::size_t size() const { return first.size(); }
};

BlockPlan make_block_plan(const Eigen::MatrixXcd& matrix, std::size_t block_count);

/// Randomized blockwise proximal gradient. Each iteration (epoch) performs J block
/// updates on blocks drawn from the plan's distribution; each update is a proximal
/// gradient step with backtracking from 1/L_j. With acceleration, Nesterov
/// extrapolation is applied between epochs and reset whenever the objective rises.
/// Throws NumericalError on a non-finite objective.
SolverReport rbpg_solve(const L1LsProblem& problem, const SolverOptions& options);
/// `initial` (empty: zero) is the starting iterate.
SolverReport rbpg_solve(const L1LsProblem& problem, const SolverOptions& options, const BlockPlan& plan,
                        const Eigen::VectorXcd& initial = {});

/// Full-gradient proximal gradient with backtracking, no randomization, no momentum.
/// Objective trace is non-increasing. Throws NumericalError if max_iterations is reached.
SolverReport reference_solve(const L1LsProblem& problem, double tolerance, std::size_t max_iterations = 2000000);

/// max_l dist(-grad_l, lambda * d|gamma_l|): zero exactly at a minimiser.
double optimality_residual(const L1LsProblem& problem, const Eigen::VectorXcd& gamma);

}  // namespace tomosar
