#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <vector>

namespace ocal {

/// Mixes a base seed with a tag and a counter into an independent stream seed.
/// Used so that pools, splits, oracle noise and per-iteration strategy draws
/// never share a stream.
std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index = 0);

/// Small deterministic generator (splitmix64 seeded xoshiro256**). Output is
/// identical across platforms, unlike the std distributions.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t next();
  /// Uniform in [0, 1).
  double uniform();
  /// Uniform integer in [0, bound).
  std::size_t below(std::size_t bound);
  bool bernoulli(double p) { return uniform() < p; }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = below(i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t s_[4];
};

}  // namespace ocal
