#ifndef MILNET_RNG_H_
#define MILNET_RNG_H_

#include <cstdint>
#include <random>
#include <vector>

namespace milnet {

// Seeded generator injected into every stochastic operation. Distribution
// sampling is done here rather than through <random> distributions so that
// streams are identical across standard library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed = 0) : engine_(seed) {}

  uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 bits of precision.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  uint64_t below(uint64_t n);

  bool bernoulli(double p) { return uniform() < p; }

  // Beta(a, a) via two gamma draws (Marsaglia-Tsang).
  double symmetric_beta(double a);

  template <typename T>
  void shuffle(std::vector<T> &v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

  // Derive an independent child stream.
  Rng fork() { return Rng(next() ^ 0x9e3779b97f4a7c15ULL); }

 private:
  double gamma(double shape);
  double normal();

  std::mt19937_64 engine_;
};

}  // namespace milnet

#endif  // MILNET_RNG_H_
