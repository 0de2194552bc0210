#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>

#include "tdac/errors.hpp"

namespace tdac {

// Portable, splittable random stream.
//
// Reproducibility contract: every random quantity in the library is produced
// by this class, and every operation documents how many draws it consumes.
// The engine is std::mt19937_64, whose output sequence is pinned by the
// standard, and all distributions are implemented here rather than taken from
// <random> (std::*_distribution output is implementation-defined).  Identical
// seeds therefore yield identical draw sequences on any conforming platform.
//
// Draw costs:
//   next_u64()       1 engine step
//   uniform()        1 draw
//   normal()         2 draws (Box-Muller, fixed cost, second variate unused)
//   uniform_int(n)   1 draw
//   categorical(p)   1 draw (inverse CDF walked in index order)
//
// Splitting: child(tag) derives an independent stream from the *construction
// seed* and the tag via splitmix64 mixing; it consumes no draws and does not
// depend on how much of the parent stream has been used.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller.  Always consumes exactly two draws.
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]: keeps the log finite
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * pi_ * u2);
  }

  // Uniform integer in [0, n).  The floor(u*n) construction has bias below
  // n * 2^-53, irrelevant at the scales this library handles.
  int uniform_int(int n) {
    if (n <= 0) throw parameter_error("Rng::uniform_int: n must be positive");
    int v = static_cast<int>(uniform() * static_cast<double>(n));
    return v < n ? v : n - 1;
  }

  // Sample an index from a probability vector by inverse CDF, accumulating in
  // index order.  Probabilities must be nonnegative and sum to ~1; the last
  // positive entry absorbs any rounding shortfall.
  int categorical(std::span<const double> probs) {
    if (probs.empty()) throw parameter_error("Rng::categorical: empty vector");
    const double u = uniform();
    double acc = 0.0;
    int last_positive = -1;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      if (probs[i] < 0.0)
        throw parameter_error("Rng::categorical: negative probability");
      if (probs[i] > 0.0) last_positive = static_cast<int>(i);
      acc += probs[i];
      if (u < acc) return static_cast<int>(i);
    }
    if (last_positive < 0)
      throw parameter_error("Rng::categorical: all-zero vector");
    return last_positive;
  }

  // Derived stream: deterministic in (construction seed, tag) only.
  Rng child(std::uint64_t tag) const {
    std::uint64_t x = seed_ ^ splitmix64(tag ^ 0x9e3779b97f4a7c15ull);
    return Rng(splitmix64(x));
  }

  static std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
  }

 private:
  static constexpr double pi_ = 3.14159265358979323846;
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace tdac
