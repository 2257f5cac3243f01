#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace halp {

// splitmix64 finalizer, used to derive independent substreams from one seed.
constexpr std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Seeded RNG with draw semantics that do not depend on the standard
// library's distribution implementations, so identical seeds give
// identical streams on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  static std::uint64_t derive(std::uint64_t seed, std::uint64_t stream) {
    return mix64(seed ^ mix64(stream));
  }

  std::uint64_t raw() { return gen_(); }

  // Uniform in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased uniform index in [0, n).
  std::size_t uniform_index(std::size_t n) {
    const std::uint64_t limit = ~0ull - ~0ull % n;
    std::uint64_t r;
    do {
      r = gen_();
    } while (r >= limit);
    return static_cast<std::size_t>(r % n);
  }

  // Standard normal via the Marsaglia polar method.
  double gaussian() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double scale = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * scale;
    has_spare_ = true;
    return u * scale;
  }

 private:
  std::mt19937_64 gen_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace halp
