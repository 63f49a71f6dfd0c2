#include "lexquad/sampling.hpp"

#include <numeric>
#include <utility>

#include "lexquad/errors.hpp"

namespace lexquad {

std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t n) {
    if (n == 0) {
        throw UsageError("bounded_draw: empty range");
    }
    // 2^64 mod n, computed without overflow.
    const std::uint64_t floor = (0 - n) % n;
    for (;;) {
        const std::uint64_t r = rng();
        if (r >= floor) {
            return r % n;
        }
    }
}

std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m, std::uint64_t seed) {
    if (m > n) {
        throw UsageError("cannot sample " + std::to_string(m) + " items from " + std::to_string(n));
    }
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::mt19937_64 rng(seed);
    for (std::size_t j = 0; j < m; ++j) {
        const auto r = j + static_cast<std::size_t>(bounded_draw(rng, n - j));
        std::swap(idx[j], idx[r]);
    }
    idx.resize(m);
    return idx;
}

}  // namespace lexquad
