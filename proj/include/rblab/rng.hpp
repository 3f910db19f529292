#pragma once

#include <cstdint>
#include <limits>
#include <span>

namespace rblab {

/// splitmix64 step; used for seeding and for deriving independent child seeds.
std::uint64_t splitmix64(std::uint64_t& state);

/// Mixes a base seed with a stream identifier into an independent seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

/// xoshiro256** generator seeded through splitmix64.
///
/// Determinism per seed is guaranteed within this implementation; the
/// distributions below are implemented here rather than taken from <random>
/// so streams do not depend on the standard library vendor.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed = 0);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()() { return next(); }

    std::uint64_t next();
    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    /// Uniform integer in [0, n). n must be positive.
    std::uint64_t below(std::uint64_t n);
    bool bernoulli(double p);
    int bit() { return static_cast<int>(next() >> 63); }
    double normal();
    /// Standard normal truncated to [-bound, bound].
    double truncated_normal(double bound);

    template <class T>
    void shuffle(std::span<T> items) {
        for (std::size_t i = items.size(); i > 1; --i) {
            std::size_t j = below(i);
            std::swap(items[i - 1], items[j]);
        }
    }

private:
    std::uint64_t s_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace rblab
