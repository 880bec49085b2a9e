#include "ocal/rng.hpp"

namespace ocal {
namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
  std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

}  // namespace

std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t index) {
  // FNV-1a over the tag, folded with base and index through splitmix.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  std::uint64_t state = base ^ h;
  std::uint64_t out = splitmix64(state);
  state ^= index;
  out ^= splitmix64(state);
  return out;
}

Rng::Rng(std::uint64_t seed) {
  for (auto& s : s_) s = splitmix64(seed);
}

std::uint64_t Rng::next() {
  const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
  const std::uint64_t t = s_[1] << 17;
  s_[2] ^= s_[0];
  s_[3] ^= s_[1];
  s_[1] ^= s_[2];
  s_[0] ^= s_[3];
  s_[2] ^= t;
  s_[3] = rotl(s_[3], 45);
  return result;
}

double Rng::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::size_t Rng::below(std::size_t bound) {
  if (bound <= 1) return 0;
  // Lemire's nearly-divisionless method with rejection.
  const std::uint64_t b = bound;
  std::uint64_t x = next();
  __uint128_t m = static_cast<__uint128_t>(x) * b;
  std::uint64_t l = static_cast<std::uint64_t>(m);
  if (l < b) {
    const std::uint64_t t = (0 - b) % b;
    while (l < t) {
      x = next();
      m = static_cast<__uint128_t>(x) * b;
      l = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::size_t>(m >> 64);
}

}  // namespace ocal
