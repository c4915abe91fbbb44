#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace ipae {

/// Seeded random stream. Built on std::mt19937_64, whose output sequence is
/// fixed by the standard; uniform and normal draws are derived here rather
/// than through <random> distributions, which are implementation-defined.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    /// Uniform in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), unbiased by rejection.
    std::size_t below(std::size_t n);

    /// Standard normal via Box-Muller; the second variate of each pair is cached.
    double normal();

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[below(i)]);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Mixes a base seed with a stream tag into an independent seed (splitmix64).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag);

}  // namespace ipae
