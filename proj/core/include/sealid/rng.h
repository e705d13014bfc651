#ifndef SEALID_RNG_H_
#define SEALID_RNG_H_

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

namespace sealid {

// Deterministic 64-bit generator used for every random decision in the
// project (LHS jitter, splits, weight init, batch shuffles).
//
// Algorithm: xoshiro256** (Blackman & Vigna). The 256-bit state is filled from
// the 64-bit seed by four successive SplitMix64 outputs. Doubles take the top
// 53 bits: (next() >> 11) * 2^-53, giving values in [0, 1). Bounded integers
// use rejection on the top bits so they are unbiased.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Uniform integer in [0, bound). bound must be > 0.
  std::uint64_t below(std::uint64_t bound);

  template <typename T>
  void shuffle(std::span<T> items) {
    // Fisher-Yates, from the back.
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::uint64_t s_[4];
};

std::uint64_t splitmix64(std::uint64_t& state);

// Sub-seed for a named stage: SplitMix64 of (seed XOR FNV-1a-64(name)).
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stage);

}  // namespace sealid

#endif  // SEALID_RNG_H_
