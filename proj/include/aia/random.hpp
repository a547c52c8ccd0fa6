#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace aia {

// Seeded generator with distribution code written out by hand: the standard
// library distributions are implementation-defined, and every artifact this
// engine writes must be reproducible bit-for-bit across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }
  // Uniform in [0, 1) with 53 bits of resolution.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Uniform integer in [0, n).
  std::size_t index(std::size_t n);
  double normal(double mean, double stddev);
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// SplitMix64 finalizer; used to derive independent sub-seeds.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

// FNV-1a over raw bytes.
std::uint64_t fnv1a(std::span<const std::uint8_t> bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

}  // namespace aia
