#ifndef RCBO_RANDOM_HPP
#define RCBO_RANDOM_HPP

#include <cstdint>
#include <limits>
#include <random>

namespace rcbo {

// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline constexpr std::uint64_t golden_gamma = 0x9e3779b97f4a7c15ULL;

// Derives an independent stream key from a seed and up to three counters.
// Keys are a pure function of their arguments, so noise does not depend on
// the order in which particles or replicas are processed.
constexpr std::uint64_t stream_key(std::uint64_t seed, std::uint64_t a,
                                   std::uint64_t b = 0, std::uint64_t c = 0) noexcept
{
    std::uint64_t k = mix64(seed + golden_gamma);
    k = mix64(k ^ (a + 0x632be59bd9b4e019ULL));
    k = mix64(k ^ (b + 0x8cb92ba72f3d8dd7ULL));
    k = mix64(k ^ (c + 0xd1b54a32d192ed03ULL));
    return k;
}

// Seed for replica r of an experiment with the given master seed.
constexpr std::uint64_t replica_seed(std::uint64_t master, std::uint64_t replica) noexcept
{
    return stream_key(master, replica, 0x5265706c69636100ULL);
}

// Counter-based generator: the i-th output is mix64(key + i * gamma).
// Satisfies UniformRandomBitGenerator.
class CounterRng {
public:
    using result_type = std::uint64_t;

    explicit constexpr CounterRng(std::uint64_t key) noexcept : state_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept
    {
        state_ += golden_gamma;
        return mix64(state_);
    }

    // Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

} // namespace rcbo

#endif // RCBO_RANDOM_HPP
