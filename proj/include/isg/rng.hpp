#pragma once

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

namespace isg {

inline std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Combine a seed with a string tag into a new seed. This is the single
// stream-splitting rule used everywhere: every consumer of randomness
// (weight draws, bias draws, each algorithm run, each tie-break source)
// derives its own sub-stream as mix_seed(master, tag).
inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view tag) {
  return splitmix64(seed ^ splitmix64(fnv1a64(tag)));
}

// Seedable random generator with named sub-streams.
//
// All draws go through the raw 64-bit output of std::mt19937_64, whose
// sequence is fixed by the standard; none of the <random> distribution
// templates are used, so results are bit-identical across platforms and
// standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

  // Sub-streams derive from the seed, not the engine state, so they are
  // independent of how much the parent has already been consumed.
  Rng stream(std::string_view tag) const { return Rng(mix_seed(seed_, tag)); }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n). Modulo reduction; the bias is < n / 2^64
  // and identical everywhere, which is what reproducibility needs.
  std::uint64_t uniform_int(std::uint64_t n) { return next_u64() % n; }

  bool bernoulli(double p) { return uniform() < p; }

  int spin() { return bernoulli(0.5) ? +1 : -1; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    shuffle_range(v, 0, v.size());
  }

  // Fisher-Yates over v[first, last).
  template <typename T>
  void shuffle_range(std::vector<T>& v, std::size_t first, std::size_t last) {
    for (std::size_t i = last; i > first + 1; --i) {
      std::size_t j = first + static_cast<std::size_t>(uniform_int(i - first));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace isg
