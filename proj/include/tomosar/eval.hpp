#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "tomosar/simulate.hpp"
#include "tomosar/slimmer.hpp"
#include "tomosar/types.hpp"

namespace tomosar {

struct RegionMask {
    std::string name;
    Raster<std::uint8_t> mask;

    std::size_t count() const;
};

/// Square (Chebyshev) erosion by `radius` pixels; pixels near the image border whose
/// neighbourhood leaves the image are removed as well.
Raster<std::uint8_t> erode(const Raster<std::uint8_t>& mask, std::size_t radius);

/// One mask per distinct rectangle label (in first-appearance order), built from the
/// final scene assignment (later rectangles overwrite earlier ones), eroded by `erosion`.
std::vector<RegionMask> scene_masks(const SceneSpec& spec, std::size_t erosion);

struct HeightStats {
    std::string region;
    double truth = 0.0;        // mean ground truth over detected pixels [m]
    double mean = 0.0;         // [m]
    double stddev = 0.0;       // sample standard deviation [m]
    double mean_error = 0.0;   // mean(estimate - truth) [m]
    std::size_t count = 0;     // detected (finite-estimate) pixels
    std::size_t mask_count = 0;
};

/// Statistics of finite estimates inside each mask. Non-finite estimates are treated as
/// non-detections and only reduce `count`. Throws DomainError for an empty mask and
/// DimensionError for mismatched rasters.
std::vector<HeightStats> height_stats(const Raster<double>& estimate, const Raster<double>& truth,
                                      const std::vector<RegionMask>& masks);

enum class SliceAxis { Row, Column };

struct ProfileSample {
    std::size_t position = 0;
    double height = 0.0;
    double truth = 0.0;
};

std::vector<ProfileSample> profile_slice(const Raster<double>& estimate, const Raster<double>& truth,
                                         SliceAxis axis, std::size_t index);

/// kappa = separation / rho_s
double normalized_distance(double separation, double rho_s);

struct SeparationHistogram {
    double bin_width = 0.0;
    std::vector<std::size_t> counts;   // bin i covers [i w, (i + 1) w) in kappa
    std::size_t total = 0;
    double sr_fraction = 0.0;          // kappa < 1
    double non_sr_fraction = 0.0;      // kappa >= 1
};

/// Histogram of |s_top - s_bottom| / rho_s over every pixel with exactly two scatterers.
SeparationHistogram separation_histogram(const std::vector<ScattererSet>& pixels, double rho_s, double bin_width);

/// Fraction of truth pixels (mask != 0) with K = 2 where the lower and upper detected
/// elevations are both within rho_s / 2 of truth_low and truth_high.
double detection_rate(const std::vector<ScattererSet>& pixels, const Raster<std::uint8_t>& truth_mask,
                      const Raster<double>& truth_low, const Raster<double>& truth_high, double rho_s);

}  // namespace tomosar
