#ifndef BRANCHLAB_RNG_HPP
#define BRANCHLAB_RNG_HPP

#include <cmath>
#include <cstdint>
#include <string_view>

namespace branchlab {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// xoshiro256** with hand-rolled samplers. We do not use the <random>
// distributions because their output is implementation-defined; study
// reports must be reproducible bit-for-bit from (seed, stream id).
class Rng {
 public:
  Rng() : Rng(0, 0) {}

  // Counter-based stream derivation: the engine state is a pure function of
  // (master_seed, stream), so ensembles are independent of worker scheduling.
  Rng(std::uint64_t master_seed, std::uint64_t stream) {
    std::uint64_t mix = master_seed ^ (stream * 0xd1342543de82ef95ULL + 0x632be59bd9b4e019ULL);
    for (auto& w : s_) w = splitmix64(mix);
    has_spare_ = false;
    spare_ = 0.0;
  }

  static Rng for_path(std::uint64_t master_seed, std::string_view scenario_tag,
                      std::uint64_t path_index) {
    std::uint64_t tag = fnv1a64(scenario_tag);
    return Rng(master_seed ^ (tag * 0x9e3779b97f4a7c15ULL), path_index);
  }

  std::uint64_t next_u64() {
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

  // Uniform on (0,1): 53-bit mantissa, zero excluded so logs are safe.
  double uniform() {
    double u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    return u > 0.0 ? u : 0x1.0p-53;
  }

  double exponential(double rate) { return -std::log(uniform()) / rate; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, r2;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      r2 = u * u + v * v;
    } while (r2 >= 1.0 || r2 == 0.0);
    const double m = std::sqrt(-2.0 * std::log(r2) / r2);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  // Knuth product method; fine for the small per-step means used here.
  std::uint64_t poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 30.0) {
      const double limit = std::exp(-mean);
      std::uint64_t n = 0;
      double prod = uniform();
      while (prod > limit) {
        ++n;
        prod *= uniform();
      }
      return n;
    }
    // Split large means; recursion depth is log2(mean/30).
    std::uint64_t half = poisson(mean / 2);
    return half + poisson(mean - mean / 2);
  }

  // index in [0, n)
  std::size_t index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n)) % n;
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

  std::uint64_t s_[4];
  double spare_;
  bool has_spare_;
};

}  // namespace branchlab

#endif
