#include "fgsim/rng.hpp"

#include <cmath>

#include "fgsim/errors.hpp"

namespace fgsim {

namespace {

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

} // namespace

RngStream::RngStream(std::uint64_t seed, std::string_view label) {
    const std::uint64_t lh = fnv1a64(label);
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(lh), static_cast<std::uint32_t>(lh >> 32)};
    engine_.seed(seq);
}

std::uint64_t RngStream::next_u64() { return engine_(); }

double RngStream::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

std::uint64_t RngStream::uniform_below(std::uint64_t n) {
    if (n == 0) throw ContractViolation("uniform_below: n must be > 0");
    if ((n & (n - 1)) == 0) return next_u64() & (n - 1);
    // Rejection sampling over the largest multiple of n below 2^64.
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
        x = next_u64();
    } while (x >= limit);
    return x % n;
}

double RngStream::normal() {
    if (has_cached_normal_) {
        has_cached_normal_ = false;
        return cached_normal_;
    }
    double u1;
    do {
        u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * 3.14159265358979323846 * u2;
    cached_normal_ = r * std::sin(theta);
    has_cached_normal_ = true;
    return r * std::cos(theta);
}

double RngStream::gamma(double shape) {
    if (!(shape > 0.0)) throw ContractViolation("gamma: shape must be > 0");
    if (shape < 1.0) {
        // Boost the shape above 1 and correct with a uniform power.
        const double u = 1.0 - uniform01(); // (0, 1]
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
        const double u = uniform01();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

RngStream seeded_rng(std::uint64_t seed, std::string_view label) {
    return RngStream(seed, label);
}

} // namespace fgsim
