#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>
#include <utility>
#include <vector>

// Portable seeded randomness. std::mt19937_64's output sequence is fixed by
// the standard, but the std distributions are not, so the helpers below are
// used everywhere a seeded result must be reproducible across toolchains.
namespace statefactory::rng {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s, std::uint64_t h = 0xCBF29CE484222325ull) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  return h;
}

inline std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return splitmix64(a ^ splitmix64(b)); }

inline std::uint64_t mix(std::uint64_t a, std::string_view s) { return splitmix64(a ^ fnv1a64(s)); }

using Engine = std::mt19937_64;

inline Engine engine(std::uint64_t seed) { return Engine(splitmix64(seed)); }

// Unbiased index in [0, n). n must be positive.
inline std::size_t uniform_index(Engine& e, std::size_t n) {
  const std::uint64_t bound = static_cast<std::uint64_t>(n);
  const std::uint64_t limit = (~std::uint64_t{0}) - ((~std::uint64_t{0}) % bound);
  std::uint64_t x;
  do {
    x = e();
  } while (x >= limit);
  return static_cast<std::size_t>(x % bound);
}

// Inclusive integer range [lo, hi].
inline int uniform_int(Engine& e, int lo, int hi) {
  return lo + static_cast<int>(uniform_index(e, static_cast<std::size_t>(hi - lo + 1)));
}

// [0, 1) with 53 random bits.
inline double uniform01(Engine& e) { return static_cast<double>(e() >> 11) * (1.0 / 9007199254740992.0); }

inline double uniform01(std::uint64_t& state) {
  state = splitmix64(state);
  return static_cast<double>(state >> 11) * (1.0 / 9007199254740992.0);
}

// Standard normal from a counter-style state (Box-Muller).
inline double normal(std::uint64_t& state) {
  double u1 = uniform01(state);
  while (u1 <= 0.0) u1 = uniform01(state);
  const double u2 = uniform01(state);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

template <class T>
void shuffle(Engine& e, std::vector<T>& v) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[uniform_index(e, i)]);
  }
}

}  // namespace statefactory::rng
