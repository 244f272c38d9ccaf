#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace fgsim {

/// Deterministic pseudo-random stream derived from (seed, label).
///
/// Every piece of randomness in the simulator flows through one of these,
/// with the label naming the purpose ("init", "stage1/round=3/client=c7",
/// ...), so per-client work is order- and thread-independent. Distributions
/// are implemented here rather than with std:: distributions because the
/// standard leaves those implementation-defined.
///
/// Single-owner: one stream per logical task, never shared.
class RngStream {
public:
    RngStream(std::uint64_t seed, std::string_view label);

    RngStream(RngStream&&) = default;
    RngStream& operator=(RngStream&&) = default;
    RngStream(const RngStream&) = delete;
    RngStream& operator=(const RngStream&) = delete;

    std::uint64_t next_u64();

    /// Uniform in [0, 1) with 53 random bits.
    double uniform01();

    double uniform(double lo, double hi);

    /// Unbiased uniform integer in [0, n); n must be > 0.
    std::uint64_t uniform_below(std::uint64_t n);

    /// Standard normal via Box-Muller (pairs cached).
    double normal();
    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Gamma(shape, 1) via Marsaglia-Tsang; shape > 0.
    double gamma(double shape);

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_below(i));
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

/// The single entry point for randomness: same (seed, label) always yields
/// the same sequence; distinct labels yield independent streams.
RngStream seeded_rng(std::uint64_t seed, std::string_view label);

} // namespace fgsim
