#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "tomosar/types.hpp"

namespace tomosar {

/// Multi-baseline acquisition geometry. Baselines are perpendicular baselines
/// relative to the master acquisition.
struct AcquisitionGeometry {
    double wavelength = 0.031;        // [m]
    double range = 704000.0;          // [m]
    double incidence_angle = 0.0;     // [rad]
    std::vector<double> baselines;    // [m], one per acquisition

    std::size_t size() const { return baselines.size(); }

    /// Elevation aperture max(b) - min(b).
    double aperture() const;

    /// Throws DomainError when an invariant is violated.
    void validate() const;
};

/// Uniformly spaced elevation samples s_0 < s_1 < ... < s_{L-1}.
class ElevationGrid {
public:
    ElevationGrid() = default;

    /// Validates strict monotonicity and uniform spacing (1e-12 relative).
    explicit ElevationGrid(std::vector<double> samples);

    static ElevationGrid uniform(double first, double last, std::size_t count);

    const std::vector<double>& samples() const { return samples_; }
    std::size_t size() const { return samples_.size(); }
    double operator[](std::size_t l) const { return samples_[l]; }
    double spacing() const { return spacing_; }
    double extent() const { return samples_.empty() ? 0.0 : samples_.back() - samples_.front(); }

    /// Index of the sample closest to s (clamped to the grid).
    std::size_t nearest(double s) const;

private:
    std::vector<double> samples_;
    double spacing_ = 0.0;
};

/// Default inversion grid: [-2 rho_s, +4 rho_s] with 4 * N * oversampling samples.
ElevationGrid default_elevation_grid(const AcquisitionGeometry& geom, int oversampling = 4);

/// N x L irregular Fourier mapping, R[n, l] = exp(j 2 pi xi_n s_l).
struct SteeringMatrix {
    Eigen::MatrixXcd entries;
    AcquisitionGeometry geometry;
    ElevationGrid grid;

    std::size_t rows() const { return static_cast<std::size_t>(entries.rows()); }
    std::size_t cols() const { return static_cast<std::size_t>(entries.cols()); }
};

/// xi_n = 2 b_n / (lambda r).
std::vector<double> spatial_frequencies(const AcquisitionGeometry& geom);

/// rho_s = lambda r / (2 delta_b). Throws DomainError for zero aperture.
double rayleigh_resolution(const AcquisitionGeometry& geom);

/// Throws DomainError unless L > N.
SteeringMatrix build_steering_matrix(const AcquisitionGeometry& geom, const ElevationGrid& grid);

Eigen::VectorXcd forward_model(const SteeringMatrix& steering, const Eigen::VectorXcd& gamma);
Eigen::VectorXcd forward_model(const SteeringMatrix& steering, const Eigen::VectorXcd& gamma,
                               const Eigen::VectorXcd& noise);

/// Interferometric phase of acquisition n for a scatterer at height h:
/// 4 pi b_n h / (lambda r sin(theta_inc)).
double height_to_phase(const AcquisitionGeometry& geom, double height, std::size_t n);

/// s = h / sin(theta_inc)
double height_to_elevation(const AcquisitionGeometry& geom, double height);
/// h = s sin(theta_inc)
double elevation_to_height(const AcquisitionGeometry& geom, double elevation);

}  // namespace tomosar
