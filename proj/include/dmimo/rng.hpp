#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace dmimo {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives a child seed from a parent seed and a sequence of indices.
/// derive_seed(s, {a, b}) differs from derive_seed(s, {b, a}) and from
/// derive_seed(s, {a}).
std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path) noexcept;

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) { return Engine{seed}; }

// Stream tags, so that streams for different purposes never collide.
enum class StreamTag : std::uint64_t {
    ApPosition = 0xA1,
    UePosition = 0xB2,
    RandomPilot = 0xC3,
    DpbTieBreak = 0xD4,
    Arrival = 0xE5,
};

inline std::uint64_t tag(StreamTag t) { return static_cast<std::uint64_t>(t); }

} // namespace dmimo
