#include "tomosar/simulate.hpp"

#include <cmath>
#include <string>

#include "tomosar/rng.hpp"

namespace tomosar {

void SceneSpec::validate() const {
    if (width == 0 || height == 0) throw DomainError("scene: width and height must be positive");
    for (std::size_t i = 0; i < rectangles.size(); ++i) {
        const auto& rect = rectangles[i];
        if (rect.origin_row + rect.rows > height || rect.origin_col + rect.cols > width)
            throw DomainError("scene: rectangle " + std::to_string(i) + " lies outside the image");
        if (!(rect.height >= 0.0) || !std::isfinite(rect.height))
            throw DomainError("scene: rectangle " + std::to_string(i) + " has a negative height");
    }
}

SceneSpec urban_scene() {
    SceneSpec spec;
    spec.height = 200;
    spec.width = 170;
    spec.rectangles = {
        {20, 20, 60, 20, 30.0, "shape1"},
        {20, 80, 30, 70, 25.0, "shape2"},
        {110, 15, 60, 60, 40.0, "shape3"},
        {110, 100, 20, 50, 50.0, "shape4"},
        {130, 95, 20, 60, 50.0, "shape4"},
        {150, 100, 20, 50, 50.0, "shape4"},
    };
    return spec;
}

Raster<double> generate_scene(const SceneSpec& spec) {
    spec.validate();
    Raster<double> map(spec.height, spec.width, 0.0);
    for (const auto& rect : spec.rectangles)
        for (std::size_t r = rect.origin_row; r < rect.origin_row + rect.rows; ++r)
            for (std::size_t c = rect.origin_col; c < rect.origin_col + rect.cols; ++c)
                map(r, c) = rect.height;
    return map;
}

std::vector<double> baseline_distribution(std::size_t n, std::uint64_t seed, double sigma_b) {
    if (n < 2) throw DomainError("baseline distribution: need at least two acquisitions");
    if (!(sigma_b >= 0.0)) throw DomainError("baseline distribution: sigma_b must be >= 0");
    SplitMix64 rng(seed);
    std::vector<double> b(n);
    for (auto& value : b) value = sigma_b * rng.normal();
    b[0] = 0.0;
    return b;
}

InsarStack::InsarStack(AcquisitionGeometry geometry, std::size_t rows, std::size_t cols,
                       std::size_t master_index)
    : geometry_(std::move(geometry)), rows_(rows), cols_(cols), master_(master_index),
      data_(geometry_.size() * rows * cols) {
    if (geometry_.size() > 0 && master_ >= geometry_.size())
        throw DomainError("stack: master index out of range");
}

Eigen::VectorXcd InsarStack::pixel(std::size_t r, std::size_t c) const {
    Eigen::VectorXcd g(acquisitions());
    for (std::size_t n = 0; n < acquisitions(); ++n) g[n] = at(n, r, c);
    return g;
}

void InsarStack::set_pixel(std::size_t r, std::size_t c, const Eigen::VectorXcd& values) {
    if (static_cast<std::size_t>(values.size()) != acquisitions())
        throw DimensionError("stack: pixel vector length mismatch");
    for (std::size_t n = 0; n < acquisitions(); ++n) at(n, r, c) = values[n];
}

InsarStack add_noise(const InsarStack& clean, double snr_db, std::uint64_t seed) {
    InsarStack out = clean;
    if (std::isinf(snr_db) && snr_db > 0) return out;
    if (!std::isfinite(snr_db)) throw DomainError("add_noise: snr_db must be finite or +inf");
    const double sigma2 = std::pow(10.0, -snr_db / 10.0);
    const double component = std::sqrt(sigma2 / 2.0);
    for (std::size_t r = 0; r < out.rows(); ++r) {
        for (std::size_t c = 0; c < out.cols(); ++c) {
            SplitMix64 rng(derive_seed(seed, r * out.cols() + c));
            for (std::size_t n = 0; n < out.acquisitions(); ++n) {
                const double re = rng.normal();
                const double im = rng.normal();
                out.at(n, r, c) += Complex(component * re, component * im);
            }
        }
    }
    return out;
}

InsarStack simulate_layers(const std::vector<ScattererLayer>& layers, const AcquisitionGeometry& geom) {
    geom.validate();
    if (layers.empty()) throw DomainError("simulate: at least one layer is required");
    const std::size_t rows = layers.front().height.rows();
    const std::size_t cols = layers.front().height.cols();
    for (const auto& layer : layers)
        if (layer.height.rows() != rows || layer.height.cols() != cols || !layer.amplitude.same_shape(layer.height))
            throw DimensionError("simulate: layer rasters must share dimensions");
    InsarStack stack(geom, rows, cols, 0);
    for (const auto& layer : layers)
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < cols; ++c) {
                const double amp = layer.amplitude(r, c);
                if (amp == 0.0) continue;
                for (std::size_t n = 0; n < geom.size(); ++n)
                    stack.at(n, r, c) += std::polar(amp, height_to_phase(geom, layer.height(r, c), n));
            }
    return stack;
}

InsarStack simulate_stack(const Raster<double>& heights, const AcquisitionGeometry& geom,
                          double snr_db, std::uint64_t seed) {
    ScattererLayer layer{heights, Raster<double>(heights.rows(), heights.cols(), 1.0)};
    return add_noise(simulate_layers({layer}, geom), snr_db, seed);
}

}  // namespace tomosar
