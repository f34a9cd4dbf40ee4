#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace citymf {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Folds a list of integers into one child seed. Order matters.
constexpr std::uint64_t derive_seed(std::uint64_t master,
                                    std::initializer_list<std::uint64_t> parts) noexcept {
    std::uint64_t s = mix64(master);
    for (auto p : parts) s = mix64(s ^ mix64(p + 0x632be59bd9b4e019ULL));
    return s;
}

// Named child streams hang off the config seed.
enum class Stream : std::uint64_t { extract = 1, split = 2, train = 3, synth = 4 };

constexpr std::uint64_t stream_seed(std::uint64_t master, Stream s) noexcept {
    return derive_seed(master, {static_cast<std::uint64_t>(s)});
}

}  // namespace citymf
