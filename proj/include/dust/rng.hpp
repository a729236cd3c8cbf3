#pragma once

#include <cstdint>
#include <initializer_list>

namespace dust {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Stream tags keep draws for different purposes independent under one seed.
enum class Stream : std::uint64_t {
  cost = 1,
  constraint = 2,
  graph = 3,
  init = 4,
  energy = 5,
  test = 99,
};

/// Counter-based generator: the output is a pure function of the key
/// (seed, stream, indices...) and the draw counter, so round t of node i can
/// be reproduced without replaying earlier draws.
///
/// Uniform doubles are built from the top 53 bits by hand instead of
/// std::uniform_real_distribution, whose output is implementation-defined.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, Stream stream, std::initializer_list<std::uint64_t> indices = {})
      : key_(mix64(seed ^ mix64(static_cast<std::uint64_t>(stream)))) {
    for (auto index : indices) key_ = mix64(key_ ^ mix64(index + 0x632be59bd9b4e019ULL));
  }

  std::uint64_t next() { return mix64(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform in (lo, hi].
  double uniform_left_open(double lo, double hi) { return hi - (hi - lo) * uniform(); }

  /// Uniform integer in [0, n). Rejection sampling removes modulo bias.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t v = next();
    while (v >= limit) v = next();
    return v % n;
  }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

}  // namespace dust
