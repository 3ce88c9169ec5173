#pragma once

#include <cstddef>
#include <span>

namespace tomosar {

/// Inputs of the closed-form elevation accuracy bounds. snr is linear.
struct AccuracyQuery {
    double wavelength = 0.031;   // [m]
    double range = 704000.0;     // [m]
    double sigma_b = 100.0;      // baseline standard deviation [m]
    double n = 29;               // acquisition count
    double snr = 10.0;           // linear
    double kappa = 3.0;          // separation / rho_s
    double delta_phi = 0.0;      // [rad]

    void validate() const;
};

/// Single-scatterer bound lambda r / (4 pi sigma_b sqrt(2 N SNR)) [m].
double crlb_single(const AccuracyQuery& query);

/// Interference factor for two scatterers at normalised distance kappa and phase
/// difference delta_phi; >= 1, exactly 1 for kappa >= 3.
double interference_factor(double kappa, double delta_phi);

/// c0 * crlb_single
double crlb_double(const AccuracyQuery& query);

/// Sample standard deviation (n - 1 denominator) of a baseline vector.
double baseline_std(std::span<const double> baselines);

}  // namespace tomosar
