#pragma once

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace geoseg {

namespace detail {

// Rejection-sampled bounded draw; keeps shuffles identical across standard
// library implementations, unlike std::uniform_int_distribution.
inline std::uint64_t bounded_draw(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

}  // namespace detail

/// Seeded selection of n ids without replacement. Input order does not matter;
/// the result is sorted ascending and fully determined by (ids, n, seed).
inline std::vector<std::int64_t> sample_ids(std::vector<std::int64_t> ids, std::size_t n,
                                            std::uint64_t seed) {
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (n >= ids.size()) return ids;
    std::mt19937_64 rng(seed);
    for (std::size_t i = ids.size() - 1; i > 0; --i) {
        const std::size_t j = static_cast<std::size_t>(detail::bounded_draw(rng, i + 1));
        std::swap(ids[i], ids[j]);
    }
    ids.resize(n);
    std::sort(ids.begin(), ids.end());
    return ids;
}

}  // namespace geoseg
