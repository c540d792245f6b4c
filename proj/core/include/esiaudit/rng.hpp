#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace esiaudit {

// splitmix64, Sebastiano Vigna (public domain). Used both as a standalone
// mixer and as the generator behind Rng so every stream of draws is fully
// specified by this file alone: no reliance on unspecified std::
// distribution algorithms, which keeps seeded output identical across
// platforms and standard library versions.
inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t mix64(uint64_t a, uint64_t b) {
  return splitmix64(a ^ (splitmix64(b) + 0x9e3779b97f4a7c15ULL));
}

// FNV-1a, 64 bit.
inline uint64_t fnv1a64(std::string_view s, uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t x = state_;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return (next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). n must be > 0.
  uint64_t uniform_int(uint64_t n) { return next_u64() % n; }

  // Uniform integer in [lo, hi] inclusive.
  int64_t uniform_range(int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(uniform_int(static_cast<uint64_t>(hi - lo + 1)));
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Index into `weights` proportional to weight. Weights need not sum to 1.
  size_t categorical(const std::vector<double>& weights) {
    double total = 0;
    for (double w : weights) total += w;
    double u = uniform() * total;
    double acc = 0;
    for (size_t i = 0; i < weights.size(); ++i) {
      acc += weights[i];
      if (u < acc) return i;
    }
    return weights.size() - 1;
  }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[uniform_int(v.size())];
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = uniform_int(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  uint64_t state_;
};

// Uniform double in [0, 1) derived from a seed and an arbitrary key chain.
// The simulator and the bootstrap use this to get independent, order-free
// streams: unit_draw(seed, k1, k2) never depends on how many draws happened
// before it.
inline double unit_draw(uint64_t seed, uint64_t k1, uint64_t k2 = 0) {
  return (mix64(mix64(seed, k1), k2) >> 11) * 0x1.0p-53;
}

}  // namespace esiaudit
