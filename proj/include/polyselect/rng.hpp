#pragma once

// Reproducible random substreams. Every stochastic step draws from a
// std::mt19937_64 seeded with derive_seed(master, tags...), where the tags
// identify the purpose and the unit of work (sample size, condition,
// replication, attempt, chain, ...). Substreams never share state, so work
// can be scheduled in any order without changing results.

#include <cstdint>
#include <initializer_list>
#include <random>

namespace polyselect {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);

/// Folds each tag into the master seed through splitmix64.
std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags);

/// Purpose tags used as the first element of a derivation.
enum class Stream : std::uint64_t {
  abilities = 1,
  responses = 2,
  chain = 3,
  mcmc_fit = 4,
};

inline std::uint64_t tag(Stream s) { return static_cast<std::uint64_t>(s); }

}  // namespace polyselect
