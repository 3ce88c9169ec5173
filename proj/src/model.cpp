#include "tomosar/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace tomosar {

double AcquisitionGeometry::aperture() const {
    if (baselines.empty()) return 0.0;
    const auto [lo, hi] = std::minmax_element(baselines.begin(), baselines.end());
    return *hi - *lo;
}

void AcquisitionGeometry::validate() const {
    if (!(wavelength > 0.0) || !std::isfinite(wavelength))
        throw DomainError("geometry: wavelength must be positive");
    if (!(range > 0.0) || !std::isfinite(range))
        throw DomainError("geometry: range must be positive");
    if (!(incidence_angle > 0.0 && incidence_angle < std::numbers::pi / 2))
        throw DomainError("geometry: incidence angle must lie in (0, pi/2)");
    if (baselines.size() < 2)
        throw DomainError("geometry: at least two acquisitions are required");
    for (double b : baselines)
        if (!std::isfinite(b)) throw DomainError("geometry: non-finite baseline");
    if (!(aperture() > 0.0))
        throw DomainError("geometry: zero elevation aperture (all baselines equal)");
}

ElevationGrid::ElevationGrid(std::vector<double> samples) : samples_(std::move(samples)) {
    if (samples_.size() < 2) throw DomainError("elevation grid needs at least two samples");
    spacing_ = (samples_.back() - samples_.front()) / static_cast<double>(samples_.size() - 1);
    if (!(spacing_ > 0.0)) throw DomainError("elevation grid must be strictly increasing");
    const double scale = std::max({std::abs(samples_.front()), std::abs(samples_.back()), spacing_});
    for (std::size_t l = 1; l < samples_.size(); ++l) {
        const double step = samples_[l] - samples_[l - 1];
        if (!(step > 0.0)) throw DomainError("elevation grid must be strictly increasing");
        if (std::abs(step - spacing_) > 1e-12 * scale)
            throw DomainError("elevation grid must be uniformly spaced");
    }
}

ElevationGrid ElevationGrid::uniform(double first, double last, std::size_t count) {
    if (count < 2 || !(last > first)) throw DomainError("elevation grid: need last > first and count >= 2");
    std::vector<double> s(count);
    const double step = (last - first) / static_cast<double>(count - 1);
    for (std::size_t l = 0; l < count; ++l) s[l] = first + step * static_cast<double>(l);
    s.back() = last;
    return ElevationGrid(std::move(s));
}

std::size_t ElevationGrid::nearest(double s) const {
    if (samples_.empty()) return 0;
    const double pos = std::round((s - samples_.front()) / spacing_);
    if (pos <= 0.0) return 0;
    return std::min(samples_.size() - 1, static_cast<std::size_t>(pos));
}

ElevationGrid default_elevation_grid(const AcquisitionGeometry& geom, int oversampling) {
    if (oversampling < 1) throw DomainError("grid oversampling must be >= 1");
    const double rho = rayleigh_resolution(geom);
    const std::size_t count = 4 * geom.size() * static_cast<std::size_t>(oversampling);
    return ElevationGrid::uniform(-2.0 * rho, 4.0 * rho, count);
}

std::vector<double> spatial_frequencies(const AcquisitionGeometry& geom) {
    std::vector<double> xi(geom.size());
    const double scale = geom.wavelength * geom.range;
    for (std::size_t n = 0; n < xi.size(); ++n) xi[n] = 2.0 * geom.baselines[n] / scale;
    return xi;
}

double rayleigh_resolution(const AcquisitionGeometry& geom) {
    const double db = geom.aperture();
    if (!(db > 0.0)) throw DomainError("rayleigh resolution: zero elevation aperture");
    return geom.wavelength * geom.range / (2.0 * db);
}

SteeringMatrix build_steering_matrix(const AcquisitionGeometry& geom, const ElevationGrid& grid) {
    geom.validate();
    if (grid.size() <= geom.size())
        throw DomainError("steering matrix: grid size L=" + std::to_string(grid.size()) +
                          " must exceed acquisition count N=" + std::to_string(geom.size()));
    const auto xi = spatial_frequencies(geom);
    SteeringMatrix out{Eigen::MatrixXcd(xi.size(), grid.size()), geom, grid};
    for (Eigen::Index l = 0; l < out.entries.cols(); ++l)
        for (Eigen::Index n = 0; n < out.entries.rows(); ++n)
            out.entries(n, l) = std::polar(1.0, 2.0 * std::numbers::pi * xi[n] * grid[l]);
    return out;
}

Eigen::VectorXcd forward_model(const SteeringMatrix& steering, const Eigen::VectorXcd& gamma) {
    if (static_cast<std::size_t>(gamma.size()) != steering.cols())
        throw DimensionError("forward model: reflectivity length does not match grid size");
    return steering.entries * gamma;
}

Eigen::VectorXcd forward_model(const SteeringMatrix& steering, const Eigen::VectorXcd& gamma,
                               const Eigen::VectorXcd& noise) {
    if (static_cast<std::size_t>(noise.size()) != steering.rows())
        throw DimensionError("forward model: noise length does not match acquisition count");
    return forward_model(steering, gamma) + noise;
}

double height_to_phase(const AcquisitionGeometry& geom, double height, std::size_t n) {
    if (n >= geom.size()) throw DomainError("height_to_phase: acquisition index out of range");
    return 4.0 * std::numbers::pi * geom.baselines[n] * height /
           (geom.wavelength * geom.range * std::sin(geom.incidence_angle));
}

double height_to_elevation(const AcquisitionGeometry& geom, double height) {
    return height / std::sin(geom.incidence_angle);
}

double elevation_to_height(const AcquisitionGeometry& geom, double elevation) {
    return elevation * std::sin(geom.incidence_angle);
}

}  // namespace tomosar
