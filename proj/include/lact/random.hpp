#pragma once

#include <cmath>
#include <cstdint>

#include "lact/grid.hpp"

namespace lact {

/// splitmix64 finalizer; full-period mixing of a 64-bit counter.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Counter-based Gaussian source. Draws are pure functions of
/// (seed, stream, index), so results do not depend on evaluation order.
class CounterRng {
  public:
    explicit CounterRng(uint64_t seed) : seed_(seed) {}

    uint64_t seed() const { return seed_; }

    /// Uniform in (0, 1], never exactly 0.
    double uniform(uint64_t stream, uint64_t index) const {
        uint64_t bits = splitmix64(splitmix64(seed_ ^ (stream * 0x9e3779b97f4a7c15ULL)) ^ index);
        return (static_cast<double>(bits >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Standard normal via Box-Muller on two decorrelated uniforms.
    double gaussian(uint64_t stream, uint64_t index) const {
        double u1 = uniform(stream, 2 * index);
        double u2 = uniform(stream, 2 * index + 1);
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    /// Fill a grid with i.i.d. N(0, sigma^2) draws on the given stream.
    void fill_gaussian(Grid& g, uint64_t stream, double sigma = 1.0) const {
        for (size_t i = 0; i < g.size(); ++i)
            g.values()[i] = sigma * gaussian(stream, i);
    }

  private:
    uint64_t seed_;
};

} // namespace lact
