#include "tomosar/nonlocal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "tomosar/parallel.hpp"

namespace tomosar {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_normaliser(double mu, double sigma2) {
    return -std::log(16.0 * std::numbers::pi * std::numbers::pi) - 2.0 * std::log(sigma2) -
           std::log1p(-mu * mu);
}

void check_pair_domain(double i1, double i2, const PairParams& theta) {
    if (!(theta.mu >= 0.0 && theta.mu < 1.0)) throw DomainError("pair likelihood: coherence must lie in [0, 1)");
    if (!(theta.sigma2 > 0.0)) throw DomainError("pair likelihood: variance must be positive");
    if (!(i1 >= 0.0 && i2 >= 0.0)) throw DomainError("pair likelihood: intensities must be non-negative");
}

std::vector<std::size_t> slave_indices(const InsarStack& stack) {
    std::vector<std::size_t> slaves;
    for (std::size_t n = 0; n < stack.acquisitions(); ++n)
        if (n != stack.master_index()) slaves.push_back(n);
    return slaves;
}

bool inside(std::ptrdiff_t r, std::ptrdiff_t c, std::size_t rows, std::size_t cols) {
    return r >= 0 && c >= 0 && r < static_cast<std::ptrdiff_t>(rows) && c < static_cast<std::ptrdiff_t>(cols);
}

/// Per pixel and pair: observed data and the log-density coefficients of the pilot,
///   log p(x | pilot) = c0 - c1 * (I1 + I2) + Re(z conj(v)),  z = g2 conj(g1).
struct PairTerms {
    double intensity_sum;
    Complex z;
    double c0;
    double c1;
    Complex v;
};

struct Prepared {
    std::size_t rows = 0, cols = 0, acquisitions = 0, pairs = 0;
    std::size_t master = 0;
    std::vector<std::size_t> slaves;
    std::vector<PairTerms> terms;       // pixel-major, `pairs` per pixel
    std::vector<double> c0_sum;         // per pixel, sum of c0 over pairs
    std::vector<Complex> samples;       // pixel-major, `acquisitions` per pixel
};

Prepared prepare(const InsarStack& stack, const PairField& pilot) {
    Prepared prep;
    prep.rows = stack.rows();
    prep.cols = stack.cols();
    prep.acquisitions = stack.acquisitions();
    prep.master = stack.master_index();
    prep.slaves = slave_indices(stack);
    prep.pairs = prep.slaves.size();
    const std::size_t npix = prep.rows * prep.cols;
    prep.terms.resize(npix * prep.pairs);
    prep.c0_sum.assign(npix, 0.0);
    prep.samples.resize(npix * prep.acquisitions);
    for (std::size_t r = 0; r < prep.rows; ++r) {
        for (std::size_t c = 0; c < prep.cols; ++c) {
            const std::size_t p = r * prep.cols + c;
            for (std::size_t n = 0; n < prep.acquisitions; ++n)
                prep.samples[p * prep.acquisitions + n] = stack.at(n, r, c);
            const Complex g1 = stack.at(prep.master, r, c);
            double c0_total = 0.0;
            for (std::size_t k = 0; k < prep.pairs; ++k) {
                const Complex g2 = stack.at(prep.slaves[k], r, c);
                const PairParams& theta = pilot.at(r, c, k);
                const double one_minus = 1.0 - theta.mu * theta.mu;
                PairTerms& t = prep.terms[p * prep.pairs + k];
                t.intensity_sum = std::norm(g1) + std::norm(g2);
                t.z = g2 * std::conj(g1);
                t.c0 = log_normaliser(theta.mu, theta.sigma2);
                t.c1 = 1.0 / (2.0 * theta.sigma2 * one_minus);
                t.v = std::polar(theta.mu / (theta.sigma2 * one_minus), theta.psi);
                c0_total += t.c0;
            }
            prep.c0_sum[p] = c0_total;
        }
    }
    return prep;
}

/// Symmetric per-pixel log-likelihood between pixels p and q, summed over pairs.
inline double symmetric_term(const Prepared& prep, std::size_t p, std::size_t q) {
    const PairTerms* a = &prep.terms[p * prep.pairs];
    const PairTerms* b = &prep.terms[q * prep.pairs];
    double acc = prep.c0_sum[p] + prep.c0_sum[q];
    for (std::size_t k = 0; k < prep.pairs; ++k) {
        acc -= a[k].c1 * b[k].intensity_sum + b[k].c1 * a[k].intensity_sum;
        acc += b[k].z.real() * a[k].v.real() + b[k].z.imag() * a[k].v.imag();
        acc += a[k].z.real() * b[k].v.real() + a[k].z.imag() * b[k].v.imag();
    }
    return 0.5 * acc;
}

struct Outputs {
    InsarStack* filtered;
    WmleField* field;
};

void filter_tile(const Prepared& prep, const NlParams& params, const Tile& tile, Outputs out) {
    const std::ptrdiff_t rows = static_cast<std::ptrdiff_t>(prep.rows);
    const std::ptrdiff_t cols = static_cast<std::ptrdiff_t>(prep.cols);
    const std::ptrdiff_t K = params.patch_radius;
    const std::ptrdiff_t S = params.search_radius;
    const std::ptrdiff_t W = 2 * S + 1;
    const std::size_t offsets = static_cast<std::size_t>(W * W);
    const double full_patch = static_cast<double>((2 * K + 1) * (2 * K + 1));
    const double scale = 1.0 / (params.h * static_cast<double>(prep.pairs));

    const std::ptrdiff_t r0 = static_cast<std::ptrdiff_t>(tile.core_row0);
    const std::ptrdiff_t r1 = static_cast<std::ptrdiff_t>(tile.core_row1);
    const std::ptrdiff_t c0 = static_cast<std::ptrdiff_t>(tile.core_col0);
    const std::ptrdiff_t c1 = static_cast<std::ptrdiff_t>(tile.core_col1);
    const std::ptrdiff_t core_rows = r1 - r0;
    const std::ptrdiff_t core_cols = c1 - c0;
    // Box of pixels touched by the patches of core pixels.
    const std::ptrdiff_t br0 = std::max<std::ptrdiff_t>(0, r0 - K);
    const std::ptrdiff_t br1 = std::min(rows, r1 + K);
    const std::ptrdiff_t bc0 = std::max<std::ptrdiff_t>(0, c0 - K);
    const std::ptrdiff_t bc1 = std::min(cols, c1 + K);
    const std::ptrdiff_t box_cols = bc1 - bc0;

    std::vector<double> log_weight(static_cast<std::size_t>(core_rows * core_cols) * offsets, kNegInf);
    std::vector<double> term(static_cast<std::size_t>((br1 - br0) * box_cols), 0.0);
    std::vector<double> vertical(static_cast<std::size_t>(core_rows * box_cols), 0.0);
    std::vector<std::ptrdiff_t> row_count(static_cast<std::size_t>(core_rows), 0);

    for (std::ptrdiff_t oy = -S; oy <= S; ++oy) {
        for (std::ptrdiff_t ox = -S; ox <= S; ++ox) {
            if (oy == 0 && ox == 0) continue;
            const std::size_t oi = static_cast<std::size_t>((oy + S) * W + (ox + S));
            // Patch offsets m are usable when both p = c + m and p + o are in the image.
            auto row_ok = [&](std::ptrdiff_t y) { return y >= 0 && y < rows && y + oy >= 0 && y + oy < rows; };
            auto col_ok = [&](std::ptrdiff_t x) { return x >= 0 && x < cols && x + ox >= 0 && x + ox < cols; };

            for (std::ptrdiff_t y = br0; y < br1; ++y) {
                if (!row_ok(y)) continue;
                double* dst = &term[static_cast<std::size_t>((y - br0) * box_cols)];
                for (std::ptrdiff_t x = bc0; x < bc1; ++x) {
                    if (!col_ok(x)) continue;
                    const std::size_t p = static_cast<std::size_t>(y * cols + x);
                    const std::size_t q = static_cast<std::size_t>((y + oy) * cols + (x + ox));
                    dst[x - bc0] = symmetric_term(prep, p, q);
                }
            }
            for (std::ptrdiff_t y = r0; y < r1; ++y) {
                double* dst = &vertical[static_cast<std::size_t>((y - r0) * box_cols)];
                std::ptrdiff_t count = 0;
                for (std::ptrdiff_t x = 0; x < box_cols; ++x) dst[x] = 0.0;
                for (std::ptrdiff_t dy = -K; dy <= K; ++dy) {
                    if (!row_ok(y + dy)) continue;
                    ++count;
                    const double* src = &term[static_cast<std::size_t>((y + dy - br0) * box_cols)];
                    for (std::ptrdiff_t x = bc0; x < bc1; ++x)
                        if (col_ok(x)) dst[x - bc0] += src[x - bc0];
                }
                row_count[static_cast<std::size_t>(y - r0)] = count;
            }
            for (std::ptrdiff_t y = r0; y < r1; ++y) {
                if (y + oy < 0 || y + oy >= rows) continue;
                const double* src = &vertical[static_cast<std::size_t>((y - r0) * box_cols)];
                const std::ptrdiff_t rc = row_count[static_cast<std::size_t>(y - r0)];
                for (std::ptrdiff_t x = c0; x < c1; ++x) {
                    if (x + ox < 0 || x + ox >= cols) continue;
                    double sum = 0.0;
                    std::ptrdiff_t cc = 0;
                    for (std::ptrdiff_t dx = -K; dx <= K; ++dx) {
                        if (!col_ok(x + dx)) continue;
                        ++cc;
                        sum += src[x + dx - bc0];
                    }
                    const std::size_t pi = static_cast<std::size_t>((y - r0) * core_cols + (x - c0));
                    log_weight[pi * offsets + oi] = sum * (full_patch / static_cast<double>(rc * cc)) * scale;
                }
            }
        }
    }

    const std::size_t N = prep.acquisitions;
    const std::size_t P = prep.pairs;
    std::vector<double> weights(offsets);
    std::vector<Complex> mean(N);
    std::vector<Complex> cross(P);
    std::vector<double> power(P);
    for (std::ptrdiff_t y = r0; y < r1; ++y) {
        for (std::ptrdiff_t x = c0; x < c1; ++x) {
            const std::size_t pi = static_cast<std::size_t>((y - r0) * core_cols + (x - c0));
            const double* lw = &log_weight[pi * offsets];
            double best = kNegInf;
            for (std::size_t o = 0; o < offsets; ++o)
                if (std::isfinite(lw[o])) best = std::max(best, lw[o]);
            for (std::size_t o = 0; o < offsets; ++o)
                weights[o] = std::isfinite(lw[o]) ? std::exp(lw[o] - best) : 0.0;
            // The center takes the largest weight among the other candidates (1 after
            // normalisation), or 1 when it is the only candidate.
            weights[static_cast<std::size_t>(S * W + S)] = 1.0;

            std::fill(mean.begin(), mean.end(), Complex{});
            std::fill(cross.begin(), cross.end(), Complex{});
            std::fill(power.begin(), power.end(), 0.0);
            double wsum = 0.0, wsq = 0.0;
            for (std::ptrdiff_t oy = -S; oy <= S; ++oy) {
                for (std::ptrdiff_t ox = -S; ox <= S; ++ox) {
                    const double w = weights[static_cast<std::size_t>((oy + S) * W + (ox + S))];
                    if (w == 0.0) continue;
                    const std::size_t q = static_cast<std::size_t>((y + oy) * cols + (x + ox));
                    const Complex* g = &prep.samples[q * N];
                    wsum += w;
                    wsq += w * w;
                    for (std::size_t n = 0; n < N; ++n) mean[n] += w * g[n];
                    const Complex g1 = g[prep.master];
                    for (std::size_t k = 0; k < P; ++k) {
                        const Complex g2 = g[prep.slaves[k]];
                        cross[k] += w * (g1 * std::conj(g2));
                        power[k] += w * (std::norm(g1) + std::norm(g2));
                    }
                }
            }
            const std::size_t ur = static_cast<std::size_t>(y), uc = static_cast<std::size_t>(x);
            for (std::size_t n = 0; n < N; ++n) out.filtered->at(n, ur, uc) = mean[n] / wsum;
            double sigma_total = 0.0;
            for (std::size_t k = 0; k < P; ++k) {
                PairParams& est = out.field->pairs.at(ur, uc, k);
                est.psi = -std::arg(cross[k]);
                est.mu = power[k] > 0.0 ? std::min(1.0, 2.0 * std::abs(cross[k]) / power[k]) : 0.0;
                est.sigma2 = power[k] / (4.0 * wsum);
                sigma_total += est.sigma2;
            }
            out.field->sigma2(ur, uc) = sigma_total / static_cast<double>(P);
            out.field->enl(ur, uc) = wsum * wsum / wsq;
        }
    }
}

}  // namespace

void NlParams::validate() const {
    if (patch_radius < 1) throw DomainError("nonlocal: patch_radius must be >= 1");
    if (search_radius < patch_radius) throw DomainError("nonlocal: search_radius must be >= patch_radius");
    if (!(h > 0.0) || !std::isfinite(h)) throw DomainError("nonlocal: h must be positive");
}

double pair_log_likelihood(double i1, double i2, double phi, const PairParams& theta) {
    check_pair_domain(i1, i2, theta);
    const double one_minus = 1.0 - theta.mu * theta.mu;
    const double quad = i1 + i2 - 2.0 * std::sqrt(i1 * i2) * theta.mu * std::cos(phi - theta.psi);
    return log_normaliser(theta.mu, theta.sigma2) - quad / (2.0 * theta.sigma2 * one_minus);
}

double pair_likelihood(double i1, double i2, double phi, const PairParams& theta) {
    check_pair_domain(i1, i2, theta);
    const double one_minus = 1.0 - theta.mu * theta.mu;
    const double quad = i1 + i2 - 2.0 * std::sqrt(i1 * i2) * theta.mu * std::cos(phi - theta.psi);
    const double norm = 16.0 * std::numbers::pi * std::numbers::pi * theta.sigma2 * theta.sigma2 * one_minus;
    return std::exp(-quad / (2.0 * theta.sigma2 * one_minus)) / norm;
}

double patch_weight(std::span<const double> log_terms, double h, std::size_t full_size) {
    if (!(h > 0.0)) throw DomainError("patch_weight: h must be positive");
    if (log_terms.empty()) return 0.0;
    double sum = 0.0;
    for (double t : log_terms) {
        if (!std::isfinite(t)) return 0.0;
        sum += t;
    }
    const double rescale = static_cast<double>(full_size) / static_cast<double>(log_terms.size());
    const double w = std::exp(sum * rescale / h);
    return std::isfinite(w) ? w : 0.0;
}

WmleEstimate wmle(std::span<const double> weights, std::span<const Complex> g1, std::span<const Complex> g2) {
    if (weights.size() != g1.size() || g1.size() != g2.size())
        throw DimensionError("wmle: weights and samples must have equal length");
    Complex cross{};
    double power = 0.0, wsum = 0.0;
    for (std::size_t s = 0; s < weights.size(); ++s) {
        cross += weights[s] * (g1[s] * std::conj(g2[s]));
        power += weights[s] * (std::norm(g1[s]) + std::norm(g2[s]));
        wsum += weights[s];
    }
    if (!(wsum > 0.0)) throw DomainError("wmle: weights must sum to a positive value");
    WmleEstimate est;
    est.psi = -std::arg(cross);
    est.mu = power > 0.0 ? std::min(1.0, 2.0 * std::abs(cross) / power) : 0.0;
    est.sigma2 = power / (4.0 * wsum);
    return est;
}

double equivalent_looks(std::span<const double> weights) {
    double sum = 0.0, sq = 0.0;
    for (double w : weights) {
        sum += w;
        sq += w * w;
    }
    if (!(sum > 0.0)) throw DomainError("equivalent_looks: weights must sum to a positive value");
    return sum * sum / sq;
}

PairField pilot_estimate(const InsarStack& stack) {
    const auto slaves = slave_indices(stack);
    const std::size_t rows = stack.rows(), cols = stack.cols();
    PairField pilot(rows, cols, slaves.size());

    double mean_intensity = 0.0;
    for (const Complex& g : stack.data()) mean_intensity += std::norm(g);
    mean_intensity /= static_cast<double>(std::max<std::size_t>(1, stack.data().size()));
    const double sigma2_floor = std::max(1e-12 * mean_intensity, 1e-200);

    std::vector<double> w;
    std::vector<Complex> a, b;
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
            for (std::size_t k = 0; k < slaves.size(); ++k) {
                w.clear();
                a.clear();
                b.clear();
                for (std::ptrdiff_t dy = -1; dy <= 1; ++dy)
                    for (std::ptrdiff_t dx = -1; dx <= 1; ++dx) {
                        const std::ptrdiff_t y = static_cast<std::ptrdiff_t>(r) + dy;
                        const std::ptrdiff_t x = static_cast<std::ptrdiff_t>(c) + dx;
                        if (!inside(y, x, rows, cols)) continue;
                        w.push_back(1.0);
                        a.push_back(stack.at(stack.master_index(), static_cast<std::size_t>(y), static_cast<std::size_t>(x)));
                        b.push_back(stack.at(slaves[k], static_cast<std::size_t>(y), static_cast<std::size_t>(x)));
                    }
                const WmleEstimate est = wmle(w, a, b);
                PairParams& out = pilot.at(r, c, k);
                out.psi = est.psi;
                out.mu = std::min(est.mu, kPilotMaxCoherence);
                out.sigma2 = std::max(est.sigma2, sigma2_floor);
            }
        }
    }
    return pilot;
}

double patch_log_similarity(const InsarStack& stack, const PairField& pilot, Pixel center,
                            Pixel candidate, const NlParams& params) {
    const auto slaves = slave_indices(stack);
    const std::size_t rows = stack.rows(), cols = stack.cols();
    const std::size_t m = stack.master_index();
    double sum = 0.0;
    std::size_t count = 0;
    for (std::ptrdiff_t dy = -params.patch_radius; dy <= params.patch_radius; ++dy) {
        for (std::ptrdiff_t dx = -params.patch_radius; dx <= params.patch_radius; ++dx) {
            const Pixel a{center.row + dy, center.col + dx};
            const Pixel b{candidate.row + dy, candidate.col + dx};
            if (!inside(a.row, a.col, rows, cols) || !inside(b.row, b.col, rows, cols)) continue;
            ++count;
            const auto ar = static_cast<std::size_t>(a.row), ac = static_cast<std::size_t>(a.col);
            const auto br = static_cast<std::size_t>(b.row), bc = static_cast<std::size_t>(b.col);
            for (std::size_t k = 0; k < slaves.size(); ++k) {
                const Complex a1 = stack.at(m, ar, ac), a2 = stack.at(slaves[k], ar, ac);
                const Complex b1 = stack.at(m, br, bc), b2 = stack.at(slaves[k], br, bc);
                const double lb = pair_log_likelihood(std::norm(b1), std::norm(b2), std::arg(b2 * std::conj(b1)),
                                                      pilot.at(ar, ac, k));
                const double la = pair_log_likelihood(std::norm(a1), std::norm(a2), std::arg(a2 * std::conj(a1)),
                                                      pilot.at(br, bc, k));
                sum += 0.5 * (lb + la);
            }
        }
    }
    if (count == 0) return kNegInf;
    const double full = static_cast<double>((2 * params.patch_radius + 1) * (2 * params.patch_radius + 1));
    return sum * full / static_cast<double>(count);
}

std::vector<double> search_weights(const InsarStack& stack, const PairField& pilot, Pixel center,
                                   const NlParams& params) {
    params.validate();
    const std::ptrdiff_t S = params.search_radius;
    const std::ptrdiff_t W = 2 * S + 1;
    const double scale = 1.0 / (params.h * static_cast<double>(pilot.pairs()));
    std::vector<double> lw(static_cast<std::size_t>(W * W), kNegInf);
    double best = kNegInf;
    for (std::ptrdiff_t oy = -S; oy <= S; ++oy)
        for (std::ptrdiff_t ox = -S; ox <= S; ++ox) {
            if (oy == 0 && ox == 0) continue;
            const Pixel cand{center.row + oy, center.col + ox};
            if (!inside(cand.row, cand.col, stack.rows(), stack.cols())) continue;
            const double v = patch_log_similarity(stack, pilot, center, cand, params) * scale;
            lw[static_cast<std::size_t>((oy + S) * W + (ox + S))] = v;
            if (std::isfinite(v)) best = std::max(best, v);
        }
    std::vector<double> w(lw.size(), 0.0);
    for (std::size_t o = 0; o < lw.size(); ++o)
        if (std::isfinite(lw[o])) w[o] = std::exp(lw[o] - best);
    w[static_cast<std::size_t>(S * W + S)] = 1.0;
    return w;
}

std::vector<Tile> partition_tiles(std::size_t rows, std::size_t cols, const NlParams& params,
                                  std::size_t tile_size) {
    const std::size_t halo = static_cast<std::size_t>(params.search_radius + params.patch_radius);
    const std::size_t step_r = tile_size == 0 ? std::max<std::size_t>(rows, 1) : tile_size;
    const std::size_t step_c = tile_size == 0 ? std::max<std::size_t>(cols, 1) : tile_size;
    std::vector<Tile> tiles;
    for (std::size_t r = 0; r < rows; r += step_r) {
        for (std::size_t c = 0; c < cols; c += step_c) {
            Tile t;
            t.core_row0 = r;
            t.core_row1 = std::min(rows, r + step_r);
            t.core_col0 = c;
            t.core_col1 = std::min(cols, c + step_c);
            t.halo_row0 = t.core_row0 > halo ? t.core_row0 - halo : 0;
            t.halo_row1 = std::min(rows, t.core_row1 + halo);
            t.halo_col0 = t.core_col0 > halo ? t.core_col0 - halo : 0;
            t.halo_col1 = std::min(cols, t.core_col1 + halo);
            tiles.push_back(t);
        }
    }
    return tiles;
}

FilterResult filter_stack(const InsarStack& stack, const NlParams& params, const FilterOptions& options) {
    params.validate();
    stack.geometry().validate();
    if (stack.data().size() != stack.acquisitions() * stack.pixels())
        throw DimensionError("filter_stack: payload size does not match stack dimensions");

    const PairField pilot = pilot_estimate(stack);
    const Prepared prep = prepare(stack, pilot);

    FilterResult result{InsarStack(stack.geometry(), stack.rows(), stack.cols(), stack.master_index()),
                        WmleField{PairField(stack.rows(), stack.cols(), prep.pairs),
                                  Raster<double>(stack.rows(), stack.cols(), 0.0),
                                  Raster<double>(stack.rows(), stack.cols(), 1.0)}};
    const auto tiles = partition_tiles(stack.rows(), stack.cols(), params, options.tile_size);
    Outputs out{&result.filtered, &result.field};
    parallel_for(tiles.size(), options.threads, [&](std::size_t i) { filter_tile(prep, params, tiles[i], out); });
    return result;
}

}  // namespace tomosar
