#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tomosar/model.hpp"
#include "tomosar/types.hpp"

namespace tomosar {

struct SceneRectangle {
    std::size_t origin_row = 0;
    std::size_t origin_col = 0;
    std::size_t rows = 0;
    std::size_t cols = 0;
    double height = 0.0;   // [m]
    /// Region name used by evaluation masks; rectangles sharing a label form one region.
    std::string label;
};

struct SceneSpec {
    std::size_t width = 0;    // columns
    std::size_t height = 0;   // rows
    std::vector<SceneRectangle> rectangles;

    void validate() const;
};

/// The four-building urban scene on a 200 x 170 (rows x cols) frame:
/// shape1 30 m (60 x 20), shape2 25 m (30 x 70), shape3 40 m (60 x 60),
/// shape4 50 m (two 20 x 50 bars joined by a 20 x 60 bar).
SceneSpec urban_scene();

/// Height map in metres; background 0, later rectangles overwrite earlier ones.
Raster<double> generate_scene(const SceneSpec& spec);

/// n baselines ~ N(0, sigma_b^2) from SplitMix64(seed); baselines[0] (the master) is forced to 0.
std::vector<double> baseline_distribution(std::size_t n, std::uint64_t seed, double sigma_b);

/// Coregistered multi-baseline stack. Samples are stored acquisition-major then row-major,
/// matching the on-disk layout.
class InsarStack {
public:
    InsarStack() = default;
    InsarStack(AcquisitionGeometry geometry, std::size_t rows, std::size_t cols,
               std::size_t master_index = 0);

    const AcquisitionGeometry& geometry() const { return geometry_; }
    std::size_t acquisitions() const { return geometry_.size(); }
    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t pixels() const { return rows_ * cols_; }
    std::size_t master_index() const { return master_; }

    Complex& at(std::size_t n, std::size_t r, std::size_t c) { return data_[(n * rows_ + r) * cols_ + c]; }
    const Complex& at(std::size_t n, std::size_t r, std::size_t c) const {
        return data_[(n * rows_ + r) * cols_ + c];
    }

    Eigen::VectorXcd pixel(std::size_t r, std::size_t c) const;
    void set_pixel(std::size_t r, std::size_t c, const Eigen::VectorXcd& values);

    std::vector<Complex>& data() { return data_; }
    const std::vector<Complex>& data() const { return data_; }

private:
    AcquisitionGeometry geometry_;
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::size_t master_ = 0;
    std::vector<Complex> data_;
};

inline constexpr double kNoiseless = std::numeric_limits<double>::infinity();

/// Adds circular complex Gaussian noise with E|e|^2 = 10^(-snr_db/10) (unit signal power).
/// Pixel (r, c) draws from SplitMix64(derive_seed(seed, r * cols + c)), real then imaginary
/// part for acquisitions 0..N-1, so serial and parallel generation agree bit for bit.
/// snr_db = +inf leaves the stack unchanged.
InsarStack add_noise(const InsarStack& clean, double snr_db, std::uint64_t seed);

/// One scatterer layer: per-pixel height [m] and amplitude (0 = no scatterer).
struct ScattererLayer {
    Raster<double> height;
    Raster<double> amplitude;
};

/// Noise-free stack from a superposition of scatterer layers.
InsarStack simulate_layers(const std::vector<ScattererLayer>& layers, const AcquisitionGeometry& geom);

/// Unit-amplitude single-scatterer stack over a height map, plus noise at snr_db.
InsarStack simulate_stack(const Raster<double>& heights, const AcquisitionGeometry& geom,
                          double snr_db, std::uint64_t seed);

}  // namespace tomosar
