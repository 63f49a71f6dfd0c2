#pragma once

// Seeded sampling shared by every reproducible random step in the library.
//
// Generator: std::mt19937_64 seeded with the caller's 64-bit seed.
// Bounded draw: rejection sampling on the raw 64-bit output, discarding
// values below (2^64 mod n) and returning r % n.
// Without-replacement sample of m from n: partial Fisher-Yates over the
// identity permutation; position j swaps with j + draw(n - j).

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace lexquad {

inline constexpr const char* kSamplerName = "mt19937_64/rejection-mod/partial-fisher-yates";

std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t n);

/// First `m` entries of a seeded partial Fisher-Yates shuffle of [0, n).
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m, std::uint64_t seed);

}  // namespace lexquad
