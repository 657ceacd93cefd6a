#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

namespace pacc {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Deterministic RNG with explicit stream derivation. All sampling in the
// library goes through this class so that results depend only on the seeds
// passed in, never on global state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : root_(splitmix64(seed)), engine_(root_) {}

  // Independent child stream identified by one or two salts. Derivation uses
  // only the construction seed, so call order does not matter.
  Rng derive(std::uint64_t salt_a, std::uint64_t salt_b = 0) const {
    std::uint64_t s = splitmix64(root_ ^ splitmix64(salt_a + 0x632be59bd9b4e019ULL));
    if (salt_b != 0) s = splitmix64(s ^ splitmix64(salt_b));
    return Rng(s);
  }

  std::uint64_t u64() { return engine_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n).
  std::size_t uniform_int(std::size_t n) {
    if (n == 0) throw std::invalid_argument("uniform_int: n must be positive");
    __uint128_t m = static_cast<__uint128_t>(u64()) * n;
    return static_cast<std::size_t>(m >> 64);
  }

  // Marsaglia polar method; the paired value is discarded so the stream
  // position is independent of call history.
  double normal(double mean = 0.0, double sd = 1.0) {
    double u, v, s;
    do {
      u = 2.0 * uniform01() - 1.0;
      v = 2.0 * uniform01() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    return mean + sd * u * std::sqrt(-2.0 * std::log(s) / s);
  }

  // Index sampled proportionally to non-negative weights.
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (total <= 0.0) throw std::invalid_argument("categorical: weights sum to zero");
    double r = uniform01() * total;
    double acc = 0.0;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      acc += weights[i];
      if (r < acc) return i;
    }
    return weights.size() - 1;
  }

  template <class T>
  void shuffle(std::vector<T>& xs) {
    for (std::size_t i = xs.size(); i > 1; --i) {
      std::size_t j = uniform_int(i);
      std::swap(xs[i - 1], xs[j]);
    }
  }

 private:
  std::uint64_t root_;
  std::mt19937_64 engine_;
};

}  // namespace pacc
