#ifndef DDAM_RNG_HPP
#define DDAM_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

#include "ddam/common.hpp"

namespace ddam {

// The single PRNG family used everywhere: xoshiro256** seeded through
// splitmix64. Streams are derived by key, never by sharing generator state,
// so every draw is reproducible from (seed, key path) alone.
inline constexpr const char* kRngName = "xoshiro256** / splitmix64";

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

class Rng {
  public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    // Derive an independent stream from a seed and an ordered key path.
    static Rng keyed(std::uint64_t seed, std::initializer_list<std::uint64_t> keys) {
        std::uint64_t sm = seed;
        std::uint64_t acc = splitmix64(sm);
        for (std::uint64_t k : keys) {
            sm = acc ^ (k + 0x9e3779b97f4a7c15ull);
            acc = splitmix64(sm);
        }
        return Rng(acc);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    // (0, 1]
    double uniform_open() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; the paired draw is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform_open();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    // Marsaglia-Tsang; shape < 1 handled by boosting. gamma(0) is exactly 0 so
    // Dirichlet rows with zero concentration produce exact zero weights.
    double gamma(double shape) {
        if (shape < 0.0) throw ConfigError("gamma: negative shape");
        if (shape == 0.0) return 0.0;
        if (shape < 1.0) {
            const double u = uniform_open();
            return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
        }
        const double d = shape - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal();
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform_open();
            if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
        }
    }

    // Chi-squared with 2 dof is Exp(mean 2): -2 ln U.
    double chi2_2() { return -2.0 * std::log(uniform_open()); }

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4]{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace ddam

#endif
