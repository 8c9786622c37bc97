#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <random>

namespace pilotlab {

namespace detail {

/// SplitMix64 step; used to derive independent substream seeds from a
/// master seed and a counter, so parallel and serial sweeps agree.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    std::uint64_t s = a;
    std::uint64_t h = splitmix64(s);
    s ^= b + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    return splitmix64(s);
}

}  // namespace detail

/// Deterministic random source. Gaussian variates go through an explicit
/// Box-Muller transform rather than std::normal_distribution, whose output
/// sequence is implementation-defined; results are reproducible for a given
/// seed on a given platform.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Substream for (master, index, salt); counter-based so any subset of
    /// substreams can be drawn independently and in any order.
    static Rng substream(std::uint64_t master, std::uint64_t index, std::uint64_t salt = 0) {
        return Rng(detail::mix(detail::mix(master, index), salt));
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform on [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Standard normal via Box-Muller; caches the second variate of each pair.
    double gaussian() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 2.0 * std::numbers::pi * u2;
        spare_ = radius * std::sin(angle);
        has_spare_ = true;
        return radius * std::cos(angle);
    }

    /// Circularly-symmetric complex normal CN(0, 1).
    std::complex<double> cgaussian() {
        const double scale = std::numbers::sqrt2 / 2.0;
        const double re = gaussian();
        const double im = gaussian();
        return {scale * re, scale * im};
    }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace pilotlab
