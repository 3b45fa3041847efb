#pragma once

// Seeded random streams and stable seed derivation.
//
// Every random quantity in the library is drawn from an Engine that was
// seeded through derive_seed(), so results depend only on (seed, keys) and
// never on call order across threads.

#include <cstdint>
#include <initializer_list>
#include <random>

namespace rle {

using Engine = std::mt19937_64;

/// SplitMix64 finalizer. Bijective on 64-bit words.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Folds an ordered list of keys into one seed. The result is a fixed
/// function of the key values, identical across platforms and runs.
constexpr std::uint64_t derive_seed(std::initializer_list<std::uint64_t> keys) noexcept
{
    std::uint64_t h = 0x6a09e667f3bcc908ULL;
    for (auto k : keys)
        h = mix64(h ^ mix64(k));
    return h;
}

/// Stream tags, so that substreams for different purposes never collide.
namespace stream {
inline constexpr std::uint64_t technology = 0x7465636800000000ULL;
inline constexpr std::uint64_t endowment = 0x656e646f00000000ULL;
inline constexpr std::uint64_t noise = 0x6e6f697300000000ULL;
inline constexpr std::uint64_t chain = 0x636861696e000000ULL;
inline constexpr std::uint64_t economy = 0x65636f6e00000000ULL;
} // namespace stream

inline Engine make_engine(std::initializer_list<std::uint64_t> keys)
{
    return Engine{derive_seed(keys)};
}

} // namespace rle
