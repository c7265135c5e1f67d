#pragma once

// Property-testing loop for the unit tests; the random generators live in generators.hpp.

#include <cstdint>

#include <doctest.h>

#include "generators.hpp"

namespace jssl::testing {

// Runs `check(value)` on `cases` values drawn by `gen(rng)`. Case k uses its own derived
// seed, printed on failure so a single case can be replayed.
template <typename Gen, typename Check>
void for_all(std::uint64_t seed, int cases, Gen gen, Check check) {
  for (int k = 0; k < cases; ++k) {
    const std::uint64_t case_seed = derive_seed(seed, {static_cast<std::uint64_t>(k)});
    Rng rng(case_seed);
    auto value = gen(rng);
    INFO("property case " << k << ", seed " << case_seed);
    check(value);
  }
}

}  // namespace jssl::testing
