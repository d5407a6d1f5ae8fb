#ifndef SELGEN_RNG_HPP
#define SELGEN_RNG_HPP

#include <cstdint>
#include <vector>

namespace selgen {

/// SplitMix64 generator. Used everywhere a seeded draw is needed so that
/// fixtures and subsamples reproduce bit-for-bit across platforms;
/// std::uniform_* distributions are implementation-defined and are avoided.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform in [0, 1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform in (0, 1]; safe for log().
    double next_double_open() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Uniform integer in [0, bound) by modulo reduction. The tiny modulo
    /// bias is irrelevant for test fixtures and keeps the mapping portable.
    std::uint64_t next_below(std::uint64_t bound) {
        return next_u64() % bound;
    }

    /// Standard normal via Box-Muller; the paired value is cached.
    double next_gaussian();

    /// First k indices of a seeded partial Fisher-Yates shuffle of 0..n-1.
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k);

private:
    std::uint64_t state_;
    bool have_cached_ = false;
    double cached_ = 0.0;
};

}  // namespace selgen

#endif
