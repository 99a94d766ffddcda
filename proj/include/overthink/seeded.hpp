#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

namespace overthink {

/// Seeded generator with platform-stable bounded draws. std::mt19937_64's
/// output sequence is fixed by the standard; the distributions are not, so
/// bounded integers and unit reals are derived here by hand.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform integer in [0, bound). Rejection sampling, no modulo bias.
  std::uint64_t below(std::uint64_t bound);

  /// Uniform real in [0, 1) with 53 random bits.
  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

/// SplitMix64 mix of (seed, stream), for deriving independent sub-seeds.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// `k` distinct indices from [0, n), uniform without replacement, returned
/// in ascending order.
std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k, SeededRng& rng);

template <typename T>
void shuffle_in_place(std::vector<T>& v, SeededRng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace overthink
