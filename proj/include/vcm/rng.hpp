#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace vcm {

// All stochastic choices use mt19937_64. Streams are never shared: every
// consumer gets its own engine seeded from derive_seed(master, keys...).
using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Counter-style sub-seed: folds each key into the running hash, so
// derive_seed(s, {r, tag, i}) depends only on its arguments and never on
// the order in which other streams were created.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> keys) noexcept {
    std::uint64_t h = mix64(master);
    for (std::uint64_t k : keys) h = mix64(h ^ mix64(k + 0x632BE59BD9B4E019ULL));
    return h;
}

// Stream tags used with derive_seed.
enum class StreamTag : std::uint64_t { Replication = 1, Grouping = 2, Agent = 3 };

inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> keys) {
    return Rng(derive_seed(master, keys));
}

}  // namespace vcm
