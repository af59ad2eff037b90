#pragma once

// Seeded random source shared by data generation, initialisation and
// batching.
//
// Engine: std::mt19937_64 (its output sequence is fixed by the C++
// standard). Conversions are done here rather than through <random>
// distributions, whose algorithms vary between standard libraries:
//   uniform01()   = (next() >> 11) * 2^-53, in [0, 1)
//   below(n)      = floor(uniform01() * n)
//   normal()      = sqrt(-2 ln(1 - u1)) * cos(2 pi u2), one value per two draws
//   bernoulli(q)  = uniform01() < q
//   shuffle       = Fisher-Yates from the back, j = below(i + 1)

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <utility>
#include <vector>

namespace ordl {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform01() * static_cast<double>(n));
  }

  double normal() {
    const double u1 = 1.0 - uniform01();
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  bool bernoulli(double q) { return uniform01() < q; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace ordl
