#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace crdtpaxos {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

// Seeded stream with platform-independent output. The distributions are
// written out by hand because the <random> ones may differ between stdlibs.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  // Independent stream per label, so adding a consumer does not shift others.
  static Rng derive(std::uint64_t seed, std::string_view label) { return Rng(seed ^ fnv1a(label)); }

  std::uint64_t next() { return engine_(); }

  // Uniform in [lo, hi].
  std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) {
    const std::uint64_t span = hi - lo + 1;
    if (span == 0) return next();  // full range
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    std::uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return lo + v % span;
  }

  double unit() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  bool bernoulli(double p) { return p > 0.0 && unit() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace crdtpaxos
