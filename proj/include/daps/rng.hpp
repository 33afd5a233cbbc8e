#pragma once

#include <cstdint>
#include <random>

#include "daps/types.hpp"

namespace daps {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser.
std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Seed for chain `index` under `master_seed`. The stream of chain i depends
/// only on (master_seed, i):
///   seed_i = splitmix64(splitmix64(master_seed) + (i + 1) * 0x9E3779B97F4A7C15)
std::uint64_t chain_seed(std::uint64_t master_seed, std::uint64_t index) noexcept;

Rng make_chain_rng(std::uint64_t master_seed, std::uint64_t index);

/// Vector of i.i.d. standard normals.
Vec standard_normal(Rng& rng, Index n);

}  // namespace daps
