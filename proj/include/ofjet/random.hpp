#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Core>
#include <boost/math/special_functions/erf.hpp>

namespace ofjet {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Child seed for (label, index) under a root seed. Stable across platforms.
inline std::uint64_t derive_seed(std::uint64_t root, std::string_view label, std::uint64_t index = 0)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return splitmix64(splitmix64(root ^ h) + index);
}

/// Standard normal CDF and its inverse.
inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

inline double normal_quantile(double u)
{
    return -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u);
}

/**
 * mt19937_64 with its own uniform and normal transforms. Every draw consumes
 * exactly one engine output, so two streams with the same seed stay aligned
 * even when they are used to sample from different distributions.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on the open interval (0, 1).
    double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

    double normal() { return normal_quantile(uniform()); }

    /// Raw 64-bit draw, e.g. to seed a child stream.
    std::uint64_t bits() { return engine_(); }

    /// Standard normal restricted to [a, b] by inverse CDF.
    double truncated_normal(double a, double b)
    {
        const double u = uniform();
        double z;
        if (a > 0.0) {
            // upper tail: work with survival functions to avoid cancellation
            const double sa = normal_cdf(-a);
            const double sb = normal_cdf(-b);
            z = -normal_quantile(sa - u * (sa - sb));
        } else {
            const double fa = normal_cdf(a);
            const double fb = normal_cdf(b);
            z = normal_quantile(fa + u * (fb - fa));
        }
        if (!std::isfinite(z)) {
            z = a > 0.0 ? a : b;
        }
        return std::clamp(z, a, b);
    }

    /// Index drawn with probability proportional to weights.
    template <class Vec>
    int categorical(const Vec& weights)
    {
        double total = 0.0;
        for (Eigen::Index i = 0; i < weights.size(); ++i) {
            total += weights(i);
        }
        double target = uniform() * total;
        for (Eigen::Index i = 0; i < weights.size(); ++i) {
            target -= weights(i);
            if (target < 0.0) {
                return static_cast<int>(i);
            }
        }
        return static_cast<int>(weights.size() - 1);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace ofjet
