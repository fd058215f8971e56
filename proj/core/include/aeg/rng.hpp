#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace aeg {

/// mt19937_64 seeded from (seed, salt) through std::seed_seq. Both engines
/// and seed_seq are fully specified by the standard, so streams are stable
/// across platforms.
std::mt19937_64 seeded_rng(std::uint64_t seed, std::string_view salt = {});

/// Uniform integer in [0, n) by rejection sampling. Unlike
/// std::uniform_int_distribution the mapping is implementation-independent.
std::uint64_t uniform_index(std::mt19937_64& rng, std::uint64_t n);

}  // namespace aeg
