#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "cacti/util.hpp"

namespace cacti {

inline std::uint64_t splitmix64(std::uint64_t& x) {
  x += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = x;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// Derives an independent stream seed from (base, path...). Stage code keys
// every stream by purpose string plus indices so work items never share state.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag) {
  std::uint64_t h = fnv1a(tag.data(), tag.size(), base ^ 0x6a09e667f3bcc908ull);
  return splitmix64(h);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t a) {
  std::uint64_t h = derive_seed(base, tag) ^ (a + 0x9e3779b97f4a7c15ull);
  return splitmix64(h);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t a,
                                 std::uint64_t b) {
  std::uint64_t h = derive_seed(base, tag, a) ^ (b * 0xd6e8feb86659fd93ull + 0x2545f4914f6cdd1dull);
  return splitmix64(h);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag, std::uint64_t a,
                                 std::uint64_t b, std::uint64_t c) {
  std::uint64_t h = derive_seed(base, tag, a, b) ^ (c * 0xa0761d6478bd642full + 0x1d8e4e27c47d124full);
  return splitmix64(h);
}

// mt19937_64 engine (bit-portable per the standard) with hand-rolled
// transforms, so draws are identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : eng_(seed) {}

  std::uint64_t bits() { return eng_(); }

  // uniform in [0,1)
  double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  float uniformf(float lo, float hi) { return static_cast<float>(uniform(lo, hi)); }

  // uniform integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    require(n > 0, "Rng::below needs n > 0");
    std::uint64_t mask = ~0ull >> std::countl_zero(n - 1 | 1);
    for (;;) {
      std::uint64_t v = eng_() & mask;
      if (v < n) return v;
    }
  }

  int below_int(int n) { return static_cast<int>(below(static_cast<std::uint64_t>(n))); }

  // standard normal, Box-Muller with cached spare
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1, u2;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  float normalf() { return static_cast<float>(normal()); }

 private:
  std::mt19937_64 eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cacti
