#ifndef LSM_RNG_HPP
#define LSM_RNG_HPP

#include <cmath>
#include <cstdint>

#include "lsm/common.hpp"

namespace lsm {

// Counter-based stream derivation: (experiment seed, realization index)
// deterministically selects an independent generator state, so parallel
// runs reproduce bit-identically regardless of scheduling. Distributions
// are implemented in-house; std:: distributions are not portable across
// library versions.

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl64(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}
}  // namespace detail

// xoshiro256++ seeded from a (seed, stream index) pair.
class Rng {
  public:
    Rng(std::uint64_t seed, std::uint64_t stream = 0) {
        std::uint64_t sm = seed;
        const std::uint64_t a = detail::splitmix64(sm);
        const std::uint64_t b = detail::splitmix64(sm);
        std::uint64_t sm2 = a ^ detail::rotl64(b, 23) ^
                            (stream * 0x9E3779B97F4A7C15ULL + 0x8CB92BA72F3D8DD7ULL);
        for (auto& word : state_) word = detail::splitmix64(sm2);
    }

    std::uint64_t next() {
        const std::uint64_t result = detail::rotl64(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = detail::rotl64(state_[3], 45);
        return result;
    }

    // Uniform on the open interval (0, 1): values (k + 0.5) * 2^-53.
    double uniform_open() {
        return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Uniform on (lo, hi), endpoints excluded.
    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform_open();
    }

    // Exact Poisson sample: sequential inversion for small means, PTRD
    // transformed rejection (Hormann) for large means.
    std::int64_t poisson(double lambda) {
        if (!(lambda >= 0.0)) throw ParameterError("poisson: mean must be >= 0");
        if (lambda == 0.0) return 0;
        if (lambda < 30.0) return poisson_inversion(lambda);
        return poisson_ptrd(lambda);
    }

  private:
    std::int64_t poisson_inversion(double lambda) {
        const double u = uniform_open();
        double p = std::exp(-lambda);
        double cdf = p;
        std::int64_t k = 0;
        while (u > cdf) {
            ++k;
            p *= lambda / static_cast<double>(k);
            cdf += p;
            if (k > 2000) break;  // cdf numerically saturated
        }
        return k;
    }

    std::int64_t poisson_ptrd(double lambda) {
        const double smu = std::sqrt(lambda);
        const double b = 0.931 + 2.53 * smu;
        const double a = -0.059 + 0.02483 * b;
        const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
        const double v_r = 0.9277 - 3.6224 / (b - 2.0);
        const double log_lambda = std::log(lambda);
        for (;;) {
            double v = uniform_open();
            double u;
            if (v <= 0.86 * v_r) {
                u = v / v_r - 0.43;
                return static_cast<std::int64_t>(
                    std::floor((2.0 * a / (0.5 - std::fabs(u)) + b) * u + lambda + 0.445));
            }
            if (v >= v_r) {
                u = uniform_open() - 0.5;
            } else {
                u = v / v_r - 0.93;
                u = (u < 0 ? -0.5 : 0.5) - u;
                v = uniform_open() * v_r;
            }
            const double us = 0.5 - std::fabs(u);
            if (us < 0.013 && v > us) continue;
            const double k =
                std::floor((2.0 * a / us + b) * u + lambda + 0.445);
            v = v * inv_alpha / (a / (us * us) + b);
            if (k >= 10.0) {
                if (std::log(v * smu) <=
                    (k + 0.5) * std::log(lambda / k) - lambda -
                        std::log(std::sqrt(2.0 * kPi)) + k -
                        (1.0 / 12.0 - 1.0 / (360.0 * k * k)) / k) {
                    return static_cast<std::int64_t>(k);
                }
            } else if (k >= 0.0) {
                if (std::log(v) <= k * log_lambda - lambda - std::lgamma(k + 1.0)) {
                    return static_cast<std::int64_t>(k);
                }
            }
        }
    }

    std::uint64_t state_[4];
};

}  // namespace lsm

#endif  // LSM_RNG_HPP
