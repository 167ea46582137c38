#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace advlab {

// Seeded generator with self-contained draw algorithms so that identical
// seeds reproduce identical streams on any platform (std::mt19937_64 is
// fully specified; the distributions in <random> are not).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next() { return eng_(); }

  // uniform in [0,1)
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  // standard normal via Box-Muller, one spare cached
  double normal();

  // unbiased integer in [0, n) by rejection
  std::size_t below(std::size_t n);

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // derived generator for an independent stream
  Rng fork(std::uint64_t stream) {
    return Rng(mix(eng_() ^ (0x9e3779b97f4a7c15ULL * (stream + 1))));
  }

 private:
  static std::uint64_t mix(std::uint64_t z);

  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace advlab
