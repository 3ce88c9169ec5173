#include "tomosar/solver.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace tomosar {

namespace {

double l1_norm(const Eigen::VectorXcd& x) {
    double sum = 0.0;
    for (Eigen::Index l = 0; l < x.size(); ++l) sum += std::abs(x[l]);
    return sum;
}

double relative_change(double before, double after) {
    const double scale = std::max({std::abs(before), std::abs(after), 1e-300});
    return std::abs(before - after) / scale;
}

}  // namespace

L1LsProblem::L1LsProblem(const Eigen::MatrixXcd& matrix, Eigen::VectorXcd rhs, double lambda)
    : matrix_(&matrix), rhs_(std::move(rhs)), lambda_(lambda) {
    if (matrix.rows() != rhs_.size()) throw DimensionError("L1 problem: rhs length does not match matrix rows");
    if (matrix.cols() == 0) throw DimensionError("L1 problem: matrix has no columns");
    if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw DomainError("L1 problem: lambda must be >= 0");
}

void SolverOptions::validate(std::size_t unknowns) const {
    if (block_count > unknowns) throw DomainError("solver: block count exceeds the number of unknowns");
    if (!(tolerance > 0.0)) throw DomainError("solver: tolerance must be positive");
    if (!(shrink > 0.0 && shrink < 1.0)) throw DomainError("solver: shrink factor must lie in (0, 1)");
    if (initial_step < 0.0) throw DomainError("solver: initial step must be >= 0");
    if (max_iterations == 0) throw DomainError("solver: max_iterations must be positive");
}

double objective(const L1LsProblem& problem, const Eigen::VectorXcd& gamma) {
    if (static_cast<std::size_t>(gamma.size()) != problem.unknowns())
        throw DimensionError("objective: gamma length mismatch");
    return (problem.matrix() * gamma - problem.rhs()).squaredNorm() + problem.lambda() * l1_norm(gamma);
}

Eigen::VectorXcd gradient(const L1LsProblem& problem, const Eigen::VectorXcd& gamma) {
    if (static_cast<std::size_t>(gamma.size()) != problem.unknowns())
        throw DimensionError("gradient: gamma length mismatch");
    return 2.0 * (problem.matrix().adjoint() * (problem.matrix() * gamma - problem.rhs()));
}

Complex soft_threshold(Complex x, double tau) {
    const double mag = std::abs(x);
    if (mag <= tau || mag == 0.0) return Complex{};
    return x * (1.0 - tau / mag);
}

double lipschitz_block(const Eigen::MatrixXcd& matrix, std::size_t first, std::size_t count) {
    if (count == 0) throw DomainError("lipschitz_block: empty block");
    if (first + count > static_cast<std::size_t>(matrix.cols()))
        throw DimensionError("lipschitz_block: block exceeds matrix columns");
    const auto block = matrix.middleCols(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
    const Eigen::MatrixXcd gram = block.adjoint() * block;

    SplitMix64 rng(0x5eedULL + count);
    Eigen::VectorXcd v(static_cast<Eigen::Index>(count));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = Complex(1.0 + 0.1 * rng.normal(), 0.1 * rng.normal());
    v.normalize();
    double estimate = 0.0;
    constexpr int kMaxIterations = 200000;
    for (int it = 0; it < kMaxIterations; ++it) {
        Eigen::VectorXcd w = gram * v;
        const double next = std::real(v.dot(w));
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        v = w / norm;
        if (it > 0 && std::abs(next - estimate) <= 1e-14 * std::abs(next)) return 2.0 * next;
        estimate = next;
    }
    throw NumericalError("lipschitz_block: power iteration did not converge");
}

std::vector<double> block_probabilities(std::span<const double> lipschitz) {
    if (lipschitz.empty()) throw DomainError("block_probabilities: no blocks");
    double total = 0.0;
    for (double l : lipschitz) {
        if (!(l > 0.0) || !std::isfinite(l)) throw DomainError("block_probabilities: Lipschitz constants must be positive");
        total += l;
    }
    std::vector<double> p(lipschitz.size());
    for (std::size_t j = 0; j < p.size(); ++j) p[j] = lipschitz[j] / total;
    return p;
}

BlockSampler::BlockSampler(std::span<const double> probabilities, std::uint64_t seed)
    : cumulative_(probabilities.size()), rng_(seed) {
    if (probabilities.empty()) throw DomainError("BlockSampler: empty distribution");
    std::partial_sum(probabilities.begin(), probabilities.end(), cumulative_.begin());
}

std::size_t BlockSampler::next() {
    const double u = rng_.uniform() * cumulative_.back();
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
}

BlockPlan make_block_plan(const Eigen::MatrixXcd& matrix, std::size_t block_count) {
    const std::size_t L = static_cast<std::size_t>(matrix.cols());
    const std::size_t J = block_count == 0 ? std::max<std::size_t>(1, L / 16) : block_count;
    if (J > L) throw DomainError("block plan: more blocks than columns");
    BlockPlan plan;
    const std::size_t base = L / J, extra = L % J;
    std::size_t start = 0;
    for (std::size_t j = 0; j < J; ++j) {
        const std::size_t cnt = base + (j < extra ? 1 : 0);
        plan.first.push_back(start);
        plan.count.push_back(cnt);
        plan.lipschitz.push_back(lipschitz_block(matrix, start, cnt));
        start += cnt;
    }
    plan.probabilities = block_probabilities(plan.lipschitz);
    return plan;
}

namespace {

// 0 minimises the objective iff 2 ||A^H g||_inf <= lambda. Checked up front so the null
// solution is exact instead of depending on block-wise rounding at the threshold.
bool zero_is_optimal(const L1LsProblem& problem) {
    const double peak = (problem.matrix().adjoint() * problem.rhs()).cwiseAbs().maxCoeff();
    return 2.0 * peak <= problem.lambda();
}

SolverReport zero_report(const L1LsProblem& problem) {
    SolverReport report;
    report.solution = Eigen::VectorXcd::Zero(problem.matrix().cols());
    report.objective_trace.push_back(problem.rhs().squaredNorm());
    report.converged = true;
    return report;
}

}  // namespace

SolverReport rbpg_solve(const L1LsProblem& problem, const SolverOptions& options) {
    options.validate(problem.unknowns());
    return rbpg_solve(problem, options, make_block_plan(problem.matrix(), options.block_count));
}

SolverReport rbpg_solve(const L1LsProblem& problem, const SolverOptions& options, const BlockPlan& plan,
                        const Eigen::VectorXcd& initial) {
    options.validate(problem.unknowns());
    const Eigen::MatrixXcd& A = problem.matrix();
    const Eigen::VectorXcd& g = problem.rhs();
    const double lambda = problem.lambda();
    const Eigen::Index L = A.cols();
    const std::size_t J = plan.size();
    const Eigen::Index max_block = static_cast<Eigen::Index>(*std::max_element(plan.count.begin(), plan.count.end()));

    if (initial.size() != 0 && initial.size() != L) throw DimensionError("rbpg_solve: initial iterate length mismatch");
    if (zero_is_optimal(problem)) return zero_report(problem);
    Eigen::VectorXcd x = initial.size() == 0 ? Eigen::VectorXcd::Zero(L) : initial;
    Eigen::VectorXcd x_prev = x;
    Eigen::VectorXcd y = x;
    Eigen::VectorXcd r = initial.size() == 0 ? Eigen::VectorXcd(-g) : Eigen::VectorXcd(A * x - g);
    Eigen::VectorXcd r_trial(r.size());
    Eigen::VectorXcd grad(max_block), cand(max_block), step(max_block);

    SolverReport report;
    double F = r.squaredNorm() + lambda * l1_norm(x);
    report.objective_trace.push_back(F);
    double t = 1.0;
    // Blocks visited since the last epoch with a relative change above tolerance.
    std::vector<char> visited(J, 0);
    std::size_t unvisited = J;
    BlockSampler sampler(plan.probabilities, options.seed);

    for (std::size_t it = 1; it <= options.max_iterations; ++it) {
        report.iterations = it;
        for (std::size_t k = 0; k < J; ++k) {
            const std::size_t j = sampler.next();
            if (!visited[j]) {
                visited[j] = 1;
                --unvisited;
            }
            const Eigen::Index first = static_cast<Eigen::Index>(plan.first[j]);
            const Eigen::Index cnt = static_cast<Eigen::Index>(plan.count[j]);
            const auto B = A.middleCols(first, cnt);
            auto gb = grad.head(cnt);
            auto cb = cand.head(cnt);
            auto db = step.head(cnt);
            gb.noalias() = B.adjoint() * r;
            gb *= 2.0;
            const double fy = r.squaredNorm();
            double alpha = options.initial_step > 0.0 ? options.initial_step : 1.0 / plan.lipschitz[j];
            bool moved = false;
            for (int tries = 0; tries < 60; ++tries) {
                for (Eigen::Index i = 0; i < cnt; ++i)
                    cb[i] = soft_threshold(y[first + i] - alpha * gb[i], alpha * lambda);
                db = cb - y.segment(first, cnt);
                const double dn = db.squaredNorm();
                if (dn == 0.0) break;
                r_trial = r;
                r_trial.noalias() += B * db;
                const double fn = r_trial.squaredNorm();
                const double model = fy + std::real(gb.dot(db)) + dn / (2.0 * alpha);
                if (fn <= model + 1e-13 * std::max(fy, 1e-300)) {
                    moved = true;
                    break;
                }
                alpha *= options.shrink;
            }
            if (moved) {
                y.segment(first, cnt) = cb;
                r.swap(r_trial);
            }
        }

        const double F_new = r.squaredNorm() + lambda * l1_norm(y);
        if (!std::isfinite(F_new)) throw NumericalError("rbpg_solve: objective became non-finite");
        if (options.accelerate && F_new > F) {
            // Momentum overshoot: drop the epoch and restart from the last accepted iterate.
            t = 1.0;
            y = x;
            r = A * x - g;
            continue;
        }
        const double change = relative_change(F, F_new);
        x_prev.swap(x);
        x = y;
        F = F_new;
        report.objective_trace.push_back(F);
        // Random sampling can miss the active blocks for several epochs, so convergence
        // also requires every block to have been tried since the last real progress.
        if (change >= options.tolerance) {
            std::fill(visited.begin(), visited.end(), 0);
            unvisited = J;
        } else if (unvisited == 0) {
            report.converged = true;
            break;
        }
        if (options.accelerate) {
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            y = x + ((t - 1.0) / t_next) * (x - x_prev);
            t = t_next;
            r = A * y - g;
        }
    }
    report.solution = x;
    return report;
}

SolverReport reference_solve(const L1LsProblem& problem, double tolerance, std::size_t max_iterations) {
    if (!(tolerance > 0.0)) throw DomainError("reference_solve: tolerance must be positive");
    const Eigen::MatrixXcd& A = problem.matrix();
    const Eigen::VectorXcd& g = problem.rhs();
    const double lambda = problem.lambda();
    const Eigen::Index L = A.cols();

    if (zero_is_optimal(problem)) return zero_report(problem);
    Eigen::VectorXcd x = Eigen::VectorXcd::Zero(L);
    Eigen::VectorXcd r = -g;
    Eigen::VectorXcd grad(L), cand(L), step(L), r_trial(r.size());
    double F = g.squaredNorm();
    double alpha = 1.0 / lipschitz_block(A, 0, static_cast<std::size_t>(L));

    SolverReport report;
    report.objective_trace.push_back(F);
    for (std::size_t it = 1; it <= max_iterations; ++it) {
        report.iterations = it;
        grad.noalias() = A.adjoint() * r;
        grad *= 2.0;
        const double fx = r.squaredNorm();
        bool moved = false;
        for (int tries = 0; tries < 60; ++tries) {
            for (Eigen::Index l = 0; l < L; ++l) cand[l] = soft_threshold(x[l] - alpha * grad[l], alpha * lambda);
            step = cand - x;
            const double dn = step.squaredNorm();
            if (dn == 0.0) break;
            r_trial = r;
            r_trial.noalias() += A * step;
            const double fn = r_trial.squaredNorm();
            if (fn <= fx + std::real(grad.dot(step)) + dn / (2.0 * alpha) + 1e-13 * std::max(fx, 1e-300)) {
                moved = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!moved) {
            report.converged = true;
            break;
        }
        const double F_new = r_trial.squaredNorm() + lambda * l1_norm(cand);
        if (!std::isfinite(F_new)) throw NumericalError("reference_solve: objective became non-finite");
        if (F_new > F) {
            // Rounding-level increase: no further progress is possible.
            report.converged = true;
            break;
        }
        const double change = relative_change(F, F_new);
        x = cand;
        r.swap(r_trial);
        F = F_new;
        report.objective_trace.push_back(F);
        if (change < tolerance) {
            report.converged = true;
            break;
        }
    }
    if (!report.converged)
        throw NumericalError("reference_solve: iteration cap of " + std::to_string(max_iterations) +
                             " reached before tolerance");
    report.solution = x;
    return report;
}

double optimality_residual(const L1LsProblem& problem, const Eigen::VectorXcd& gamma) {
    const Eigen::VectorXcd grad = gradient(problem, gamma);
    const double lambda = problem.lambda();
    double worst = 0.0;
    for (Eigen::Index l = 0; l < gamma.size(); ++l) {
        const double mag = std::abs(gamma[l]);
        const double dist = mag > 0.0 ? std::abs(grad[l] + lambda * gamma[l] / mag)
                                      : std::max(0.0, std::abs(grad[l]) - lambda);
        worst = std::max(worst, dist);
    }
    return worst;
}

}  // namespace tomosar
