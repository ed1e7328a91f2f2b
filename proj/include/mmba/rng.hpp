#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace mmba {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(stream));
}

// Deterministic random source. The mt19937_64 engine is bit-exact across
// implementations; the transforms below are hand-rolled because the standard
// <random> distributions are not.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; consumes two draws per call.
  double normal() {
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    auto span = static_cast<std::uint64_t>(hi - lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
  }

  // Derived stream, independent of draws taken from this one so far.
  Rng fork(std::uint64_t stream) const { return Rng(mix_seed(seed_, stream)); }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace mmba
