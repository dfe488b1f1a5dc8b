#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <string_view>
#include <vector>

// Counter-based random number generation. Every draw is a pure function of
// (seed, position), so noise fields and initializers are reproducible
// bit-for-bit regardless of traversal order or thread count.

namespace apa::rng {

inline constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ull;

// splitmix64 finalizer.
inline std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// n-th value of the splitmix64 stream keyed by `seed`.
inline std::uint64_t at(std::uint64_t seed, std::uint64_t n) {
  return mix64(seed + (n + 1) * kGolden);
}

// [0, 1)
inline double unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

// (0, 1] -- safe as a log() argument.
inline double unit_open(std::uint64_t bits) {
  return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53;
}

// FNV-1a over a label, mixed with a base seed. Used to derive independent
// sub-streams ("noise/scene3", "init/syn", ...) from one run seed.
inline std::uint64_t derive(std::uint64_t seed, std::string_view label) {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : label) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return mix64(seed ^ h);
}

// Standard normal sample at stream position n, via Box-Muller over the
// (2n, 2n+1) pair of uniforms.
inline double gaussian_at(std::uint64_t seed, std::uint64_t n) {
  const double u1 = unit_open(at(seed, 2 * n));
  const double u2 = unit(at(seed, 2 * n + 1));
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

// Sequential convenience wrapper over the counter-based stream.
class Stream {
public:
  explicit Stream(std::uint64_t seed, std::uint64_t pos = 0) : seed_(seed), pos_(pos) {}

  std::uint64_t next_u64() { return at(seed_, pos_++); }
  double uniform() { return unit(next_u64()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  // Unbiased integer in [0, n) by rejection.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }
  double gaussian() {
    const double u1 = unit_open(next_u64());
    const double u2 = unit(next_u64());
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t position() const { return pos_; }

private:
  std::uint64_t seed_;
  std::uint64_t pos_;
};

template <class T>
void shuffle(std::vector<T>& items, Stream& stream) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(stream.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace apa::rng
