#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "tomosar/model.hpp"
#include "tomosar/simulate.hpp"
#include "tomosar/solver.hpp"
#include "tomosar/types.hpp"

namespace tomosar {

struct Scatterer {
    double elevation = 0.0;       // [m]
    std::size_t grid_index = 0;
    Complex amplitude{};
};

/// Detected scatterers of one pixel, sorted by increasing elevation.
struct ScattererSet {
    std::vector<Scatterer> scatterers;
    double noise_variance = 0.0;   // residual power / N of the selected model

    std::size_t order() const { return scatterers.size(); }
};

struct PipelineOptions {
    std::size_t k_max = 2;
    double support_threshold = 0.2;   // fraction of max |gamma| kept by scale_down
    double lambda_factor = 0.05;      // lambda = factor * ||R^H g||_inf
    double penalty_weight = 1.0;      // 1: BIC; 0: pure likelihood
    SolverOptions solver{.tolerance = 1e-4};

    void validate() const;
};

/// Dense L1-regularised estimate via rbpg_solve. The start is a greedy least-squares fit of
/// up to `start_atoms` columns (a column is only added when it lowers order_criterion),
/// shrunk by the penalty.
Eigen::VectorXcd l1_step(const Eigen::VectorXcd& g, const SteeringMatrix& steering, double lambda,
                         const SolverOptions& options, const BlockPlan& plan, std::size_t start_atoms = 1,
                         double penalty_weight = 1.0);

/// Candidate support: indices with |gamma_l| >= threshold * max|gamma|; runs of adjacent
/// indices collapse to their largest member; at most 4 * k_max strongest are kept.
/// Returned in increasing index order.
std::vector<std::size_t> scale_down(const Eigen::VectorXcd& gamma, double threshold, std::size_t k_max);

/// Least-squares amplitudes on the support columns. Throws NumericalError when the
/// normal matrix condition number exceeds 1e12.
Eigen::VectorXcd debias(const Eigen::VectorXcd& g, const SteeringMatrix& steering,
                        const std::vector<std::size_t>& support);

/// 2N ln(pi sigma2) + 2N + penalty_weight * 3 K ln(2N) for N samples. sigma2 is floored at
/// 1e-14 * power so exact fits stay finite.
double order_criterion(double sigma2, double power, std::size_t order, Eigen::Index samples, double penalty_weight);

struct ModelSelection {
    std::size_t order = 0;
    std::vector<std::size_t> support;
    Eigen::VectorXcd amplitudes;
    double criterion = 0.0;
    double noise_variance = 0.0;
};

/// Minimises 2N ln(pi sigma_K^2) + 2N + penalty_weight * 3K ln(2N) over all subsets of the
/// candidates with at most k_max elements, sigma_K^2 being the least-squares residual power / N.
/// Rank-deficient subsets are skipped; ties within 1e-9 go to the smaller K.
ModelSelection model_order_selection(const Eigen::VectorXcd& g, const SteeringMatrix& steering,
                                     const std::vector<std::size_t>& candidates, std::size_t k_max,
                                     double penalty_weight = 1.0);

/// Per-pixel inversion: L1 step, scale-down, model order selection, least squares.
ScattererSet invert_pixel(const Eigen::VectorXcd& g, const SteeringMatrix& steering,
                          const PipelineOptions& options, const BlockPlan& plan, std::uint64_t seed);
ScattererSet invert_pixel(const Eigen::VectorXcd& g, const SteeringMatrix& steering,
                          const PipelineOptions& options);

struct ImageInversion {
    std::size_t rows = 0, cols = 0;
    std::vector<ScattererSet> pixels;   // row-major
    Raster<double> top_height;          // highest scatterer; NaN when K = 0
    Raster<double> ground_height;       // lowest scatterer of K >= 2 pixels; NaN otherwise
    Raster<std::uint8_t> order;

    const ScattererSet& at(std::size_t r, std::size_t c) const { return pixels[r * cols + c]; }
};

/// invert_pixel over every pixel; the solver seed of pixel i is derive_seed(options.solver.seed, i).
/// Result does not depend on the thread count.
ImageInversion invert_image(const InsarStack& stack, const SteeringMatrix& steering,
                            const PipelineOptions& options, unsigned threads = 1);

}  // namespace tomosar
