#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace hsbf {

//! SplitMix64 step; used to derive independent stream seeds from one seed.
std::uint64_t splitmix64(std::uint64_t& state);

//! Seed of stream `index` derived from `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index);

//! Uniform random permutation of 0..n-1 (Fisher-Yates driven directly by
//! mt19937_64 output, so it is identical across standard libraries).
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

//! Fold label of each of n observations: a seeded shuffle cut into
//! `folds` contiguous blocks of near-equal size.
std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed);

} // namespace hsbf
