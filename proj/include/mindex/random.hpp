#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "mindex/types.hpp"

namespace mindex {

using Rng = std::mt19937_64;

std::uint64_t splitmix64(std::uint64_t x);

// Independent stream seeds derived from one master seed by fixed offsets.
enum class SeedStream : std::uint64_t {
  dataset1 = 1,
  dataset2 = 2,
  init = 3,
  bias_reinit = 4,
  test_set = 5,
  shuffle = 6,
  population = 7,
};

std::uint64_t derive_seed(std::uint64_t master, SeedStream stream);
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

// Stable 64-bit FNV-1a; used for config hashes and per-cell seeds.
std::uint64_t fnv1a64(std::string_view bytes);

// Fills `out` row by row with i.i.d. N(0, 1) draws.
void fill_gaussian(Rng& rng, Matrix& out);
void fill_gaussian(Rng& rng, Vector& out);

}  // namespace mindex
