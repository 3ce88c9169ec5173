#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace tomosar {

/// SplitMix64 stream. The seed -> sequence mapping is part of the file-format
/// contract (simulated stacks are reproducible from their manifest), so this
/// generator is implemented here rather than taken from <random>, whose
/// distributions are implementation-defined.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform in the open interval (0, 1), 53 bits.
    double uniform() {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller; consumes two uniforms per pair of draws.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Seed of substream `index` under `seed`: two rounds of the SplitMix64 finalizer
/// over (seed, index). Used for per-pixel noise and per-pixel solver streams.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
    SplitMix64 outer(seed);
    const std::uint64_t base = outer.next();
    SplitMix64 inner(base ^ (index * 0xd1b54a32d192ed03ULL));
    return inner.next();
}

}  // namespace tomosar
