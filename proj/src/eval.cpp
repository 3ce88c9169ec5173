#include "tomosar/eval.hpp"

#include <algorithm>
#include <cmath>

namespace tomosar {

std::size_t RegionMask::count() const {
    return static_cast<std::size_t>(std::count_if(mask.data().begin(), mask.data().end(),
                                                  [](std::uint8_t v) { return v != 0; }));
}

Raster<std::uint8_t> erode(const Raster<std::uint8_t>& mask, std::size_t radius) {
    if (radius == 0) return mask;
    Raster<std::uint8_t> out(mask.rows(), mask.cols(), 0);
    const auto R = static_cast<std::ptrdiff_t>(radius);
    const auto rows = static_cast<std::ptrdiff_t>(mask.rows());
    const auto cols = static_cast<std::ptrdiff_t>(mask.cols());
    for (std::ptrdiff_t r = 0; r < rows; ++r)
        for (std::ptrdiff_t c = 0; c < cols; ++c) {
            bool keep = mask(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) != 0;
            for (std::ptrdiff_t dy = -R; keep && dy <= R; ++dy)
                for (std::ptrdiff_t dx = -R; keep && dx <= R; ++dx) {
                    const std::ptrdiff_t y = r + dy, x = c + dx;
                    if (y < 0 || x < 0 || y >= rows || x >= cols ||
                        mask(static_cast<std::size_t>(y), static_cast<std::size_t>(x)) == 0)
                        keep = false;
                }
            out(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = keep ? 1 : 0;
        }
    return out;
}

std::vector<RegionMask> scene_masks(const SceneSpec& spec, std::size_t erosion) {
    spec.validate();
    std::vector<std::string> names;
    for (std::size_t i = 0; i < spec.rectangles.size(); ++i) {
        const std::string name = spec.rectangles[i].label.empty() ? "shape" + std::to_string(i + 1)
                                                                  : spec.rectangles[i].label;
        if (std::find(names.begin(), names.end(), name) == names.end()) names.push_back(name);
    }
    // Owner label of every pixel after overwriting.
    Raster<int> owner(spec.height, spec.width, -1);
    for (std::size_t i = 0; i < spec.rectangles.size(); ++i) {
        const auto& rect = spec.rectangles[i];
        const std::string name = rect.label.empty() ? "shape" + std::to_string(i + 1) : rect.label;
        const int id = static_cast<int>(std::find(names.begin(), names.end(), name) - names.begin());
        for (std::size_t r = rect.origin_row; r < rect.origin_row + rect.rows; ++r)
            for (std::size_t c = rect.origin_col; c < rect.origin_col + rect.cols; ++c) owner(r, c) = id;
    }
    std::vector<RegionMask> masks;
    for (std::size_t id = 0; id < names.size(); ++id) {
        Raster<std::uint8_t> m(spec.height, spec.width, 0);
        for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = owner.data()[i] == static_cast<int>(id) ? 1 : 0;
        masks.push_back({names[id], erode(m, erosion)});
    }
    return masks;
}

std::vector<HeightStats> height_stats(const Raster<double>& estimate, const Raster<double>& truth,
                                      const std::vector<RegionMask>& masks) {
    if (!estimate.same_shape(truth)) throw DimensionError("height_stats: estimate and truth differ in shape");
    std::vector<HeightStats> out;
    for (const auto& region : masks) {
        if (!region.mask.same_shape(estimate)) throw DimensionError("height_stats: mask shape mismatch");
        HeightStats s;
        s.region = region.name;
        s.mask_count = region.count();
        if (s.mask_count == 0) throw DomainError("height_stats: mask '" + region.name + "' is empty");
        double sum = 0.0, sum_truth = 0.0;
        for (std::size_t i = 0; i < estimate.size(); ++i) {
            if (!region.mask.data()[i] || !std::isfinite(estimate.data()[i])) continue;
            sum += estimate.data()[i];
            sum_truth += truth.data()[i];
            ++s.count;
        }
        if (s.count == 0) {
            s.truth = s.mean = s.stddev = s.mean_error = std::nan("");
            out.push_back(s);
            continue;
        }
        const double n = static_cast<double>(s.count);
        s.mean = sum / n;
        s.truth = sum_truth / n;
        double ss = 0.0, err = 0.0;
        for (std::size_t i = 0; i < estimate.size(); ++i) {
            if (!region.mask.data()[i] || !std::isfinite(estimate.data()[i])) continue;
            ss += (estimate.data()[i] - s.mean) * (estimate.data()[i] - s.mean);
            err += estimate.data()[i] - truth.data()[i];
        }
        s.stddev = s.count > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
        s.mean_error = err / n;
        out.push_back(s);
    }
    return out;
}

std::vector<ProfileSample> profile_slice(const Raster<double>& estimate, const Raster<double>& truth,
                                         SliceAxis axis, std::size_t index) {
    if (!estimate.same_shape(truth)) throw DimensionError("profile_slice: estimate and truth differ in shape");
    std::vector<ProfileSample> out;
    if (axis == SliceAxis::Row) {
        if (index >= estimate.rows()) throw DomainError("profile_slice: row index out of range");
        for (std::size_t c = 0; c < estimate.cols(); ++c) out.push_back({c, estimate(index, c), truth(index, c)});
    } else {
        if (index >= estimate.cols()) throw DomainError("profile_slice: column index out of range");
        for (std::size_t r = 0; r < estimate.rows(); ++r) out.push_back({r, estimate(r, index), truth(r, index)});
    }
    return out;
}

double normalized_distance(double separation, double rho_s) {
    if (!(rho_s > 0.0)) throw DomainError("normalized_distance: rho_s must be positive");
    return separation / rho_s;
}

SeparationHistogram separation_histogram(const std::vector<ScattererSet>& pixels, double rho_s, double bin_width) {
    if (!(bin_width > 0.0)) throw DomainError("separation_histogram: bin width must be positive");
    SeparationHistogram hist;
    hist.bin_width = bin_width;
    std::size_t sr = 0;
    for (const auto& set : pixels) {
        if (set.order() != 2) continue;
        const double kappa = normalized_distance(
            std::abs(set.scatterers.back().elevation - set.scatterers.front().elevation), rho_s);
        const auto bin = static_cast<std::size_t>(std::floor(kappa / bin_width));
        if (hist.counts.size() <= bin) hist.counts.resize(bin + 1, 0);
        ++hist.counts[bin];
        ++hist.total;
        if (kappa < 1.0) ++sr;
    }
    if (hist.total > 0) {
        hist.sr_fraction = static_cast<double>(sr) / static_cast<double>(hist.total);
        hist.non_sr_fraction = 1.0 - hist.sr_fraction;
    }
    return hist;
}

double detection_rate(const std::vector<ScattererSet>& pixels, const Raster<std::uint8_t>& truth_mask,
                      const Raster<double>& truth_low, const Raster<double>& truth_high, double rho_s) {
    if (pixels.size() != truth_mask.size() || !truth_mask.same_shape(truth_low) || !truth_low.same_shape(truth_high))
        throw DimensionError("detection_rate: input sizes differ");
    if (!(rho_s > 0.0)) throw DomainError("detection_rate: rho_s must be positive");
    std::size_t total = 0, hits = 0;
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        if (!truth_mask.data()[i]) continue;
        ++total;
        const auto& set = pixels[i];
        if (set.order() != 2) continue;
        if (std::abs(set.scatterers.front().elevation - truth_low.data()[i]) <= rho_s / 2 &&
            std::abs(set.scatterers.back().elevation - truth_high.data()[i]) <= rho_s / 2)
            ++hits;
    }
    if (total == 0) throw DomainError("detection_rate: empty truth mask");
    return static_cast<double>(hits) / static_cast<double>(total);
}

}  // namespace tomosar
