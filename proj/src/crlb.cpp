#include "tomosar/crlb.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "tomosar/error.hpp"

namespace tomosar {

void AccuracyQuery::validate() const {
    if (!(wavelength > 0.0 && range > 0.0 && sigma_b > 0.0))
        throw DomainError("crlb: wavelength, range and sigma_b must be positive");
    if (!(n >= 2.0)) throw DomainError("crlb: N must be >= 2");
    if (!(snr > 0.0)) throw DomainError("crlb: SNR must be positive");
}

double crlb_single(const AccuracyQuery& query) {
    query.validate();
    return query.wavelength * query.range /
           (4.0 * std::numbers::pi * query.sigma_b * std::sqrt(2.0 * query.n * query.snr));
}

double interference_factor(double kappa, double delta_phi) {
    if (!(kappa > 0.0) || !std::isfinite(kappa)) throw DomainError("interference_factor: kappa must be positive");
    const double numerator = 40.0 / (kappa * kappa) * (1.0 - kappa / 3.0);
    if (numerator <= 0.0) return 1.0;
    const double a = 3.0 - 2.0 * kappa;
    const double denominator = 9.0 - 6.0 * a * std::cos(2.0 * delta_phi) + a * a;
    if (!(denominator > 0.0)) throw DomainError("interference_factor: vanishing denominator");
    return std::max(std::sqrt(numerator / denominator), 1.0);
}

double crlb_double(const AccuracyQuery& query) {
    return interference_factor(query.kappa, query.delta_phi) * crlb_single(query);
}

double baseline_std(std::span<const double> baselines) {
    if (baselines.size() < 2) throw DomainError("baseline_std: need at least two baselines");
    double mean = 0.0;
    for (double b : baselines) mean += b;
    mean /= static_cast<double>(baselines.size());
    double ss = 0.0;
    for (double b : baselines) ss += (b - mean) * (b - mean);
    return std::sqrt(ss / static_cast<double>(baselines.size() - 1));
}

}  // namespace tomosar
