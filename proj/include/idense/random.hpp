#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace idense {

/// SplitMix64 finaliser; used to turn (seed, stream, counter) into independent sub-seeds.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Stream identifiers for derive_seed. Every random draw in the toolkit is keyed by one of these.
enum class SeedStream : std::uint64_t {
  kmeans_restart = 1,
  fold_assignment = 2,
  inner_folds = 3,
  synthetic = 4,
};

/// sub_seed = splitmix64(splitmix64(seed ^ stream * golden) + counter).
constexpr std::uint64_t derive_seed(std::uint64_t seed, SeedStream stream, std::uint64_t counter) noexcept {
  return splitmix64(splitmix64(seed ^ (static_cast<std::uint64_t>(stream) * 0x9E3779B97F4A7C15ULL)) + counter);
}

/// mt19937_64 with platform-independent derived distributions (the std ones are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  /// Uniform double in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n), unbiased by rejection.
  std::uint64_t index(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t r;
    do r = engine_();
    while (r >= limit);
    return r % n;
  }

  /// Standard normal by Box-Muller (no cached second value, so the stream is stateless).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace idense
