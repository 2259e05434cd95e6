#pragma once

#include <cstdint>
#include <random>

namespace cvl {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives the seed of stream `index` from a global seed: seed_k = mix(mix(global) ^ k).
/// Every per-member or per-purpose random stream in the library goes through here.
constexpr std::uint64_t split_seed(std::uint64_t global_seed, std::uint64_t index) noexcept
{
    return mix64(mix64(global_seed) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

} // namespace cvl
