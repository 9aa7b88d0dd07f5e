#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace iddlab {

using real = double;

/// Base class for all library errors.
struct error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Shapes of two arguments do not match, or an index is out of range.
struct dimension_error : error {
    using error::error;
};

/// A distribution places mass where its reference distribution has none.
struct support_error : error {
    support_error(const std::string& what, long index)
        : error(what + " (index " + std::to_string(index) + ")"), offending_index(index) {}
    long offending_index;
};

/// An operation's stated precondition does not hold for the given inputs.
struct precondition_error : error {
    using error::error;
};

/// A config or input file failed validation; message carries the field path.
struct validation_error : error {
    using error::error;
};

/// Deterministic generator used everywhere randomness is needed.
using rng_t = std::mt19937_64;

inline real uniform01(rng_t& rng) {
    return std::uniform_real_distribution<real>(0.0, 1.0)(rng);
}

inline real normal01(rng_t& rng) {
    return std::normal_distribution<real>(0.0, 1.0)(rng);
}

/// Samples an index from an unnormalized nonnegative weight vector.
inline int sample_index(std::span<const real> weights, rng_t& rng) {
    real total = 0.0;
    for (real w : weights) total += w;
    real u = uniform01(rng) * total;
    real acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
        acc += weights[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
}

/// log(1 + e^x) without overflow.
inline real softplus(real x) {
    if (x > 0) return x + std::log1p(std::exp(-x));
    return std::log1p(std::exp(x));
}

inline real sigmoid(real x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    real e = std::exp(x);
    return e / (1.0 + e);
}

/// FNV-1a over a byte string; used for config fingerprints.
inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline real mean_of(std::span<const real> xs) {
    real s = 0.0;
    for (real x : xs) s += x;
    return xs.empty() ? 0.0 : s / static_cast<real>(xs.size());
}

/// Population standard deviation.
inline real stddev_of(std::span<const real> xs) {
    if (xs.empty()) return 0.0;
    real m = mean_of(xs);
    real s = 0.0;
    for (real x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<real>(xs.size()));
}

}  // namespace iddlab
