#include "hsbf/random.hpp"

#include <numeric>
#include <stdexcept>

namespace hsbf {

std::uint64_t splitmix64(std::uint64_t& state)
{
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index)
{
  std::uint64_t state = seed ^ (0xD1B54A32D192ED03ULL * (index + 1));
  splitmix64(state);
  return splitmix64(state);
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed)
{
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{ 0 });
  std::mt19937_64 rng(seed);
  for (std::size_t i = n; i > 1; --i) {
    // unbiased draw from [0, i) by rejection
    const std::uint64_t bound = static_cast<std::uint64_t>(i);
    const std::uint64_t limit = std::mt19937_64::max() - std::mt19937_64::max() % bound;
    std::uint64_t v = rng();
    while (v >= limit) {
      v = rng();
    }
    std::swap(idx[i - 1], idx[static_cast<std::size_t>(v % bound)]);
  }
  return idx;
}

std::vector<std::size_t> fold_assignment(std::size_t n, std::size_t folds, std::uint64_t seed)
{
  if (folds == 0) {
    throw std::invalid_argument("at least one fold is required");
  }
  const auto order = shuffled_indices(n, seed);
  std::vector<std::size_t> label(n);
  for (std::size_t pos = 0; pos < n; ++pos) {
    label[order[pos]] = pos * folds / n;
  }
  return label;
}

} // namespace hsbf
