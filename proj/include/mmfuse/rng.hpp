#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>
#include <vector>

namespace mmfuse {

// Seeded generator with platform-independent draws: only the raw 64-bit engine
// output is used, never the implementation-defined std distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  double uniform();                          // [0, 1)
  double uniform(double lo, double hi);
  double normal();                           // standard normal (Box-Muller)
  double normal(double mean, double sd) { return mean + sd * normal(); }
  double gamma(double shape);                // shape > 0, unit scale
  std::size_t index(std::size_t n);          // uniform in [0, n)
  std::vector<std::size_t> permutation(std::size_t n);
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[index(i)]);
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Mixes a base seed with stream tags (trial id, fold, ...) into an independent seed.
std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> tags);

}  // namespace mmfuse
