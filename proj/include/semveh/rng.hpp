#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>

#include "semveh/types.hpp"

namespace semveh {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Deterministic RNG stream. Distribution transforms are implemented here
/// (not via std:: distributions) so that sampled sequences depend only on
/// the seed, not on the standard library implementation.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Derives an independent child stream; `tag` separates usages.
  Rng child(std::uint64_t tag) { return Rng(splitmix64(engine_() ^ splitmix64(tag))); }

  /// Uniform in [0, 1).
  Scalar uniform() {
    return static_cast<Scalar>(engine_() >> 11) * 0x1.0p-53;
  }

  Scalar uniform(Scalar lo, Scalar hi) { return lo + (hi - lo) * uniform(); }

  /// Integer in [0, n).
  int uniform_int(int n) { return static_cast<int>(engine_() % static_cast<std::uint64_t>(n)); }

  /// Standard normal via Box-Muller.
  Scalar normal() {
    Scalar u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const Scalar u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  Scalar normal(Scalar mean, Scalar stddev) { return mean + stddev * normal(); }

  /// Rayleigh fading power |g|^2 with E[|g|^2] = 1: g circular complex normal.
  Scalar rayleigh_power() {
    const Scalar re = normal();
    const Scalar im = normal();
    return 0.5 * (re * re + im * im);
  }

  std::string serialize() const {
    std::ostringstream os;
    os << engine_;
    return os.str();
  }

  void deserialize(const std::string& state) {
    std::istringstream is(state);
    is >> engine_;
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace semveh
