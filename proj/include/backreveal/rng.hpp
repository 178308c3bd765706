#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace backreveal {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Deterministic RNG. The standard distributions are implementation-defined,
/// so uniform/below are derived from raw mt19937_64 output directly; results
/// are identical across compilers.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next() { return eng_(); }

  /// Uniform double in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, n). n must be > 0.
  uint64_t below(uint64_t n) {
    // Multiply-shift; the bias is < 2^-64 per draw, irrelevant at fixture scale.
    return static_cast<uint64_t>((static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  size_t index(size_t n) { return static_cast<size_t>(below(n)); }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

  template <class T>
  const T& pick(const std::vector<T>& v) {
    return v[index(v.size())];
  }

  /// Independent stream for (master seed, stream index) pairs.
  static Rng stream(uint64_t master_seed, uint64_t stream_index) {
    return Rng(splitmix64(master_seed ^ splitmix64(stream_index + 1)));
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace backreveal
