#include "tomosar/slimmer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "tomosar/parallel.hpp"
#include "tomosar/rng.hpp"

namespace tomosar {

namespace {

constexpr double kConditionCap = 1e12;

Eigen::MatrixXcd support_columns(const SteeringMatrix& steering, const std::vector<std::size_t>& support) {
    Eigen::MatrixXcd sub(steering.entries.rows(), static_cast<Eigen::Index>(support.size()));
    for (std::size_t k = 0; k < support.size(); ++k) {
        if (support[k] >= steering.cols()) throw DimensionError("support index outside the grid");
        sub.col(static_cast<Eigen::Index>(k)) = steering.entries.col(static_cast<Eigen::Index>(support[k]));
    }
    return sub;
}

/// Visits every subset of {0..n-1} of size k in lexicographic order.
template <class Visit>
void for_each_subset(std::size_t n, std::size_t k, Visit&& visit) {
    std::vector<std::size_t> idx(k);
    for (std::size_t i = 0; i < k; ++i) idx[i] = i;
    if (k > n) return;
    for (;;) {
        visit(idx);
        std::size_t i = k;
        while (i > 0 && idx[i - 1] == n - k + (i - 1)) --i;
        if (i == 0) return;
        ++idx[i - 1];
        for (std::size_t j = i; j < k; ++j) idx[j] = idx[j - 1] + 1;
    }
}

}  // namespace

double order_criterion(double sigma2, double power, std::size_t order, Eigen::Index samples, double penalty_weight) {
    const double N = static_cast<double>(samples);
    // Keeps ln(sigma^2) finite for exact fits; far below any noise level of interest.
    const double variance_floor = std::max(1e-14 * power, 1e-300);
    return 2.0 * N * std::log(std::numbers::pi * std::max(sigma2, variance_floor)) + 2.0 * N +
           penalty_weight * 3.0 * static_cast<double>(order) * std::log(2.0 * N);
}

void PipelineOptions::validate() const {
    if (!(support_threshold > 0.0 && support_threshold <= 1.0))
        throw DomainError("pipeline: support threshold must lie in (0, 1]");
    if (!(lambda_factor >= 0.0)) throw DomainError("pipeline: lambda factor must be >= 0");
    if (!(penalty_weight >= 0.0)) throw DomainError("pipeline: penalty weight must be >= 0");
}

Eigen::VectorXcd l1_step(const Eigen::VectorXcd& g, const SteeringMatrix& steering, double lambda,
                         const SolverOptions& options, const BlockPlan& plan, std::size_t start_atoms,
                         double penalty_weight) {
    const L1LsProblem problem(steering.entries, g, lambda);
    const Eigen::MatrixXcd& R = steering.entries;
    const double N = static_cast<double>(g.size());
    const double power = g.squaredNorm() / N;

    // Greedy start: add the matched-filter peak of the residual, refit, move every picked
    // column to the peak left by the others, and keep the extra column only if the order
    // criterion improves. The fit is then shrunk by the l1 penalty. On a finely sampled
    // grid a zero start spreads energy over many near-collinear columns and converges slowly.
    struct Fit {
        std::vector<std::size_t> picked;
        Eigen::VectorXcd amplitudes;
        Eigen::VectorXcd residual;
    };
    auto refit = [&](std::vector<std::size_t> picked) {
        const Eigen::MatrixXcd sub = support_columns(steering, picked);
        Fit f{std::move(picked), sub.colPivHouseholderQr().solve(g), Eigen::VectorXcd()};
        f.residual = g - sub * f.amplitudes;
        return f;
    };
    auto score = [&](const Fit& f) {
        return order_criterion(f.residual.squaredNorm() / N, power, f.picked.size(), g.size(), penalty_weight);
    };
    auto contains = [](const std::vector<std::size_t>& v, std::size_t x) {
        return std::find(v.begin(), v.end(), x) != v.end();
    };

    Fit best;
    best.residual = g;
    for (std::size_t k = 0; k < start_atoms; ++k) {
        Eigen::Index peak = 0;
        if ((R.adjoint() * best.residual).cwiseAbs().maxCoeff(&peak) <= 1e-12 * g.norm()) break;
        if (contains(best.picked, static_cast<std::size_t>(peak))) break;
        std::vector<std::size_t> picked = best.picked;
        picked.push_back(static_cast<std::size_t>(peak));
        Fit fit = refit(std::move(picked));
        for (int sweep = 0; sweep < 10 && fit.picked.size() > 1; ++sweep) {
            bool moved = false;
            for (std::size_t i = 0; i < fit.picked.size(); ++i) {
                const Eigen::VectorXcd others =
                    fit.residual + fit.amplitudes[static_cast<Eigen::Index>(i)] * R.col(static_cast<Eigen::Index>(fit.picked[i]));
                Eigen::Index move = 0;
                (R.adjoint() * others).cwiseAbs().maxCoeff(&move);
                if (contains(fit.picked, static_cast<std::size_t>(move))) continue;
                std::vector<std::size_t> trial = fit.picked;
                trial[i] = static_cast<std::size_t>(move);
                Fit candidate = refit(std::move(trial));
                if (candidate.residual.squaredNorm() >= fit.residual.squaredNorm()) continue;
                fit = std::move(candidate);
                moved = true;
            }
            if (!moved) break;
        }
        if (k > 0 && score(fit) >= score(best)) break;
        best = std::move(fit);
    }

    Eigen::VectorXcd start = Eigen::VectorXcd::Zero(R.cols());
    for (std::size_t k = 0; k < best.picked.size(); ++k) {
        const auto col = static_cast<Eigen::Index>(best.picked[k]);
        start[col] = soft_threshold(best.amplitudes[static_cast<Eigen::Index>(k)], lambda / (2.0 * R.col(col).squaredNorm()));
    }
    return rbpg_solve(problem, options, plan, start).solution;
}

std::vector<std::size_t> scale_down(const Eigen::VectorXcd& gamma, double threshold, std::size_t k_max) {
    const Eigen::Index L = gamma.size();
    double peak = 0.0;
    for (Eigen::Index l = 0; l < L; ++l) peak = std::max(peak, std::abs(gamma[l]));
    if (peak == 0.0 || k_max == 0) return {};
    const double floor = threshold * peak;

    std::vector<std::size_t> merged;
    Eigen::Index l = 0;
    while (l < L) {
        if (std::abs(gamma[l]) < floor) {
            ++l;
            continue;
        }
        Eigen::Index best = l;
        while (l < L && std::abs(gamma[l]) >= floor) {
            if (std::abs(gamma[l]) > std::abs(gamma[best])) best = l;
            ++l;
        }
        merged.push_back(static_cast<std::size_t>(best));
    }
    const std::size_t cap = 4 * k_max;
    if (merged.size() > cap) {
        std::stable_sort(merged.begin(), merged.end(), [&](std::size_t a, std::size_t b) {
            return std::abs(gamma[static_cast<Eigen::Index>(a)]) > std::abs(gamma[static_cast<Eigen::Index>(b)]);
        });
        merged.resize(cap);
        std::sort(merged.begin(), merged.end());
    }
    return merged;
}

Eigen::VectorXcd debias(const Eigen::VectorXcd& g, const SteeringMatrix& steering,
                        const std::vector<std::size_t>& support) {
    if (static_cast<std::size_t>(g.size()) != steering.rows()) throw DimensionError("debias: measurement length mismatch");
    if (support.empty()) return Eigen::VectorXcd(0);
    const Eigen::MatrixXcd sub = support_columns(steering, support);
    const Eigen::MatrixXcd normal = sub.adjoint() * sub;
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(normal, Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    const double hi = eig.eigenvalues().maxCoeff();
    if (!(lo > 0.0) || hi / lo > kConditionCap) throw NumericalError("debias: singular normal matrix");
    return sub.colPivHouseholderQr().solve(g);
}

ModelSelection model_order_selection(const Eigen::VectorXcd& g, const SteeringMatrix& steering,
                                     const std::vector<std::size_t>& candidates, std::size_t k_max,
                                     double penalty_weight) {
    const double N = static_cast<double>(g.size());
    const double power = g.squaredNorm() / N;
    auto criterion = [&](double sigma2, std::size_t k) {
        return order_criterion(sigma2, power, k, g.size(), penalty_weight);
    };

    ModelSelection best;
    best.amplitudes = Eigen::VectorXcd(0);
    best.noise_variance = power;
    best.criterion = criterion(power, 0);
    const std::size_t k_top = std::min(k_max, candidates.size());
    for (std::size_t k = 1; k <= k_top; ++k) {
        for_each_subset(candidates.size(), k, [&](const std::vector<std::size_t>& pick) {
            std::vector<std::size_t> support(k);
            for (std::size_t i = 0; i < k; ++i) support[i] = candidates[pick[i]];
            Eigen::VectorXcd amp;
            try {
                amp = debias(g, steering, support);
            } catch (const NumericalError&) {
                return;
            }
            const double sigma2 = (g - support_columns(steering, support) * amp).squaredNorm() / N;
            const double value = criterion(sigma2, k);
            if (value < best.criterion - 1e-9) {
                best.order = k;
                best.support = support;
                best.amplitudes = amp;
                best.criterion = value;
                best.noise_variance = sigma2;
            }
        });
    }
    return best;
}

ScattererSet invert_pixel(const Eigen::VectorXcd& g, const SteeringMatrix& steering,
                          const PipelineOptions& options, const BlockPlan& plan, std::uint64_t seed) {
    if (static_cast<std::size_t>(g.size()) != steering.rows()) throw DimensionError("invert_pixel: measurement length mismatch");
    ScattererSet out;
    const Eigen::VectorXcd correlation = steering.entries.adjoint() * g;
    const double peak = correlation.cwiseAbs().maxCoeff();
    if (peak == 0.0) return out;

    SolverOptions solver = options.solver;
    solver.seed = seed;
    const Eigen::VectorXcd gamma = l1_step(g, steering, options.lambda_factor * peak, solver, plan, options.k_max,
                                            options.penalty_weight);
    const auto candidates = scale_down(gamma, options.support_threshold, options.k_max);
    const ModelSelection sel = model_order_selection(g, steering, candidates, options.k_max, options.penalty_weight);

    out.noise_variance = sel.noise_variance;
    for (std::size_t k = 0; k < sel.order; ++k)
        out.scatterers.push_back({steering.grid[sel.support[k]], sel.support[k], sel.amplitudes[static_cast<Eigen::Index>(k)]});
    std::sort(out.scatterers.begin(), out.scatterers.end(),
              [](const Scatterer& a, const Scatterer& b) { return a.elevation < b.elevation; });
    return out;
}

ScattererSet invert_pixel(const Eigen::VectorXcd& g, const SteeringMatrix& steering, const PipelineOptions& options) {
    options.validate();
    options.solver.validate(steering.cols());
    return invert_pixel(g, steering, options, make_block_plan(steering.entries, options.solver.block_count),
                        options.solver.seed);
}

ImageInversion invert_image(const InsarStack& stack, const SteeringMatrix& steering,
                            const PipelineOptions& options, unsigned threads) {
    options.validate();
    options.solver.validate(steering.cols());
    if (stack.acquisitions() != steering.rows())
        throw DimensionError("invert_image: stack acquisition count does not match the steering matrix");
    const BlockPlan plan = make_block_plan(steering.entries, options.solver.block_count);
    const double nan = std::numeric_limits<double>::quiet_NaN();

    ImageInversion out;
    out.rows = stack.rows();
    out.cols = stack.cols();
    out.pixels.resize(stack.pixels());
    out.top_height = Raster<double>(out.rows, out.cols, nan);
    out.ground_height = Raster<double>(out.rows, out.cols, nan);
    out.order = Raster<std::uint8_t>(out.rows, out.cols, 0);
    const double sin_inc = std::sin(stack.geometry().incidence_angle);

    parallel_for(out.rows, threads, [&](std::size_t r) {
        for (std::size_t c = 0; c < out.cols; ++c) {
            const std::size_t index = r * out.cols + c;
            ScattererSet set = invert_pixel(stack.pixel(r, c), steering, options, plan,
                                            derive_seed(options.solver.seed, index));
            out.order(r, c) = static_cast<std::uint8_t>(std::min<std::size_t>(set.order(), 255));
            if (set.order() >= 1) out.top_height(r, c) = set.scatterers.back().elevation * sin_inc;
            if (set.order() >= 2) out.ground_height(r, c) = set.scatterers.front().elevation * sin_inc;
            out.pixels[index] = std::move(set);
        }
    });
    return out;
}

}  // namespace tomosar
