#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace glyphforge {

namespace detail {

// splitmix64 finalizer, used to derive independent seed streams.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

} // namespace detail

/// Seeded generator with fully specified draw functions. std::mt19937_64 is
/// pinned by the standard and the mappings below avoid std::uniform_*
/// distributions, whose output is implementation-defined, so identical seeds
/// give identical streams on every toolchain.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(detail::mix64(seed)) {}

    /// Independent substream for (seed, stream) pairs; draw order in one
    /// stream never perturbs another.
    static Rng derive(std::uint64_t seed, std::uint64_t stream) {
        return Rng(detail::mix64(seed ^ detail::mix64(stream + 0x51ed2701a9e5f3d7ULL)));
    }

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), n >= 1. Rejection-free modulo of a 64-bit
    /// draw; bias is negligible for the n used here and the mapping is stable.
    std::uint64_t uniform_index(std::uint64_t n) { return next_u64() % n; }

    /// Seeded Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
};

} // namespace glyphforge
