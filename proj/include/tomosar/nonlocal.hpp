#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "tomosar/simulate.hpp"
#include "tomosar/types.hpp"

namespace tomosar {

struct NlParams {
    int patch_radius = 3;     // 7 x 7 patches
    int search_radius = 10;   // 21 x 21 search window
    double h = 12.0;          // per-pair filtering parameter

    void validate() const;
};

/// Interferometric parameters (psi, mu, sigma^2) of one master/slave pair.
struct PairParams {
    double psi = 0.0;
    double mu = 0.0;
    double sigma2 = 1.0;
};

/// Joint density p(I1, I2, phi) of a circular Gaussian pair with phase psi,
/// coherence mu and per-channel variance sigma2 (<I1> = <I2> = 2 sigma2).
/// Throws DomainError for mu outside [0, 1) or sigma2 <= 0.
double pair_likelihood(double i1, double i2, double phi, const PairParams& theta);
double pair_log_likelihood(double i1, double i2, double phi, const PairParams& theta);

/// Patch weight exp((1/h) * sum(log_terms) * full_size / log_terms.size()).
/// The rescaling keeps border-clipped patches comparable with full ones.
/// Any non-finite term gives weight 0.
double patch_weight(std::span<const double> log_terms, double h, std::size_t full_size);

struct WmleEstimate {
    double psi = 0.0;
    double mu = 0.0;
    double sigma2 = 0.0;
};

/// Weighted maximum-likelihood estimate of one pair from samples g1 (master) and g2 (slave):
///   psi    = -arg(sum w g1 conj(g2))
///   mu     = 2 |sum w g1 conj(g2)| / sum w (|g1|^2 + |g2|^2)
///   sigma2 = sum w (|g1|^2 + |g2|^2) / (4 sum w)
/// Throws DomainError when the weights do not sum to a positive value.
WmleEstimate wmle(std::span<const double> weights, std::span<const Complex> g1, std::span<const Complex> g2);

/// (sum w)^2 / sum w^2
double equivalent_looks(std::span<const double> weights);

/// Per-pixel, per-pair parameter field. Pairs are (master, n) for every n != master,
/// in increasing n.
class PairField {
public:
    PairField() = default;
    PairField(std::size_t rows, std::size_t cols, std::size_t pairs)
        : rows_(rows), cols_(cols), pairs_(pairs), values_(rows * cols * pairs) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t pairs() const { return pairs_; }

    PairParams& at(std::size_t r, std::size_t c, std::size_t pair) {
        return values_[(r * cols_ + c) * pairs_ + pair];
    }
    const PairParams& at(std::size_t r, std::size_t c, std::size_t pair) const {
        return values_[(r * cols_ + c) * pairs_ + pair];
    }

private:
    std::size_t rows_ = 0, cols_ = 0, pairs_ = 0;
    std::vector<PairParams> values_;
};

/// Filter diagnostics: WMLE per pixel and pair, pixel variance (mean of the per-pair
/// sigma2 estimates) and the equivalent number of looks.
struct WmleField {
    PairField pairs;
    Raster<double> sigma2;
    Raster<double> enl;
};

/// Coherence cap applied to pilot estimates so the pair density stays finite.
inline constexpr double kPilotMaxCoherence = 0.98;

/// 3 x 3 boxcar WMLE (clipped at borders), clamped to mu <= kPilotMaxCoherence and a
/// positive variance floor. Seeds the likelihood-based similarity.
PairField pilot_estimate(const InsarStack& stack);

/// Symmetric patch log-similarity between center and candidate:
///   sum over patch offsets m and pairs of
///   [log p(x(cand+m) | pilot(center+m)) + log p(x(center+m) | pilot(cand+m))] / 2
/// over offsets where both pixels are inside the image, rescaled to the full patch size.
/// Returns -inf if no patch offset is available.
double patch_log_similarity(const InsarStack& stack, const PairField& pilot, Pixel center,
                            Pixel candidate, const NlParams& params);

/// Search-window weights of one pixel computed directly from patch_log_similarity.
/// Offsets are enumerated row-major over the window; out-of-image candidates get weight 0.
/// The center weight equals the largest other weight, which is normalised to 1.
std::vector<double> search_weights(const InsarStack& stack, const PairField& pilot, Pixel center,
                                   const NlParams& params);

struct Tile {
    // Half-open ranges.
    std::size_t core_row0 = 0, core_row1 = 0, core_col0 = 0, core_col1 = 0;
    std::size_t halo_row0 = 0, halo_row1 = 0, halo_col0 = 0, halo_col1 = 0;
};

/// Cores of tile_size x tile_size (smaller at the right/bottom edges) partitioning the image;
/// halos extend each core by search_radius + patch_radius, clipped to the image.
/// tile_size == 0 yields a single tile covering the image.
std::vector<Tile> partition_tiles(std::size_t rows, std::size_t cols, const NlParams& params,
                                  std::size_t tile_size);

struct FilterOptions {
    std::size_t tile_size = 0;   // 0: whole image as one tile
    unsigned threads = 1;        // 0: hardware concurrency
};

struct FilterResult {
    InsarStack filtered;
    WmleField field;
};

/// Non-local filtering of a stack: one weight field per pixel from the pair-aggregated
/// patch similarity, the weighted mean of every acquisition as filtered measurement and
/// the WMLE diagnostics with the same weights. Output does not depend on tile size or
/// thread count.
FilterResult filter_stack(const InsarStack& stack, const NlParams& params, const FilterOptions& options = {});

}  // namespace tomosar
