#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace splitnet {

// splitmix64 step; used both as a generator seeder and as a key mixer.
std::uint64_t splitmix64(std::uint64_t& state);

// Mix an arbitrary number of integer keys into one 64-bit seed.
std::uint64_t mix_keys(std::initializer_list<std::uint64_t> keys);

// Deterministic random stream. Gaussian sampling is implemented by hand
// (Box-Muller) so results do not depend on the standard library's
// distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform();                       // [0, 1)
  double uniform(double lo, double hi);   // [lo, hi)
  double normal();                        // N(0, 1)
  double normal(double mean, double stddev);
  double gamma(double alpha);             // shape alpha, scale 1
  double beta(double alpha, double beta);
  std::uint64_t next_u64() { return engine_(); }
  // integer in [0, n)
  std::uint64_t below(std::uint64_t n);

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace splitnet
