#pragma once

#include <cmath>
#include <cstdint>

namespace mvblow {

// Stateless counter-based generator. Every draw is a pure function of
// (seed, stream, counter), so results are independent of evaluation order
// and of how work is split across threads.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix(seed ^ mix(stream * 0x9e3779b97f4a7c15ULL + 0x6a09e667f3bcc909ULL))) {}

  // Uniform on (0, 1]; never returns 0, safe under log().
  double uniform(std::uint64_t counter) const {
    std::uint64_t v = mix(key_ + counter * 0xd1b54a32d192ed03ULL);
    return static_cast<double>((v >> 11) + 1) * 0x1.0p-53;
  }

  // Standard normal pair via Box-Muller from counters (2c, 2c+1).
  void normal_pair(std::uint64_t c, double& z0, double& z1) const {
    double u1 = uniform(2 * c);
    double u2 = uniform(2 * c + 1);
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    z0 = r * std::cos(a);
    z1 = r * std::sin(a);
  }

  double normal(std::uint64_t c) const {
    double z0, z1;
    normal_pair(c, z0, z1);
    return z0;
  }

  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
  }

  // Derived seed for substreams (replicates, bootstrap, ...).
  static std::uint64_t derive(std::uint64_t seed, std::uint64_t tag) {
    return mix(seed + 0x9e3779b97f4a7c15ULL * (tag + 1));
  }

 private:
  std::uint64_t key_;
};

}  // namespace mvblow
