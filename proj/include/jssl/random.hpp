#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace jssl {

// Pseudo-random source built on std::mt19937_64, whose output sequence is fixed by the
// standard. The standard distributions are implementation-defined, so every draw below
// is derived from raw engine output to keep results identical across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on the open interval (0, 1).
  double uniform_open() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  // Uniform integer in [0, bound) by rejection sampling.
  std::uint64_t uniform_index(std::uint64_t bound);

  // Standard normal via the Box-Muller transform; the second variate is cached.
  double normal();

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// splitmix64 finalizer.
std::uint64_t mix64(std::uint64_t x);

// FNV-1a hash of a string, used to fold learner names into derived seeds.
std::uint64_t hash_name(std::string_view name);

// Deterministic seed for a sub-task, e.g. derive_seed(master, {repetition, fold, hash_name(learner)}).
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> parts);

}  // namespace jssl
