#pragma once

#include <cmath>
#include <cstdint>
#include <complex>

namespace dpa {

/// Deterministic random stream (xoshiro256++). All sampling in this project
/// goes through explicit streams so that layouts, fading, policies and
/// training draws never interleave and runs replay bit-exactly on any platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    // splitmix64 expansion of the seed into the xoshiro state
    std::uint64_t x = seed;
    for (auto& s : state_) {
      x += 0x9e3779b97f4a7c15ULL;
      std::uint64_t z = x;
      z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
      z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
      s = z ^ (z >> 31);
    }
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [0, n).
  std::size_t uniform_index(std::size_t n) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(n));
  }

  /// Standard normal via Box-Muller (two uniforms per draw, no cached spare).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  /// Circularly symmetric complex Gaussian with E|z|^2 = 1
  /// (amplitude sqrt(-ln u), uniform phase).
  std::complex<double> cgauss() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double amp = std::sqrt(-std::log(u1));
    const double phi = 2.0 * M_PI * uniform();
    return {amp * std::cos(phi), amp * std::sin(phi)};
  }

  /// Normal truncated to [-bound, bound] standard deviations (redraw).
  double truncated_normal(double stddev, double bound = 2.0) {
    double z = normal();
    while (std::fabs(z) > bound) z = normal();
    return stddev * z;
  }

 private:
  static std::uint64_t rotl(std::uint64_t v, int k) {
    return (v << k) | (v >> (64 - k));
  }
  std::uint64_t state_[4];
};

/// Named substreams derived from one master seed.
enum class Stream : std::uint64_t {
  geometry = 1,
  shadowing = 2,
  fading_init = 3,
  fading_step = 4,
  doppler = 5,
  policy = 6,
  trainer = 7,
  net_init = 8,
  solver_init = 9,
  random_alloc = 10,
};

inline Rng make_stream(std::uint64_t master_seed, Stream s) {
  return Rng(master_seed * 0x2545f4914f6cdd1dULL + static_cast<std::uint64_t>(s));
}

}  // namespace dpa
