#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <functional>
#include <limits>
#include <numbers>
#include <string>

namespace kinstab {

/// SplitMix64 finalizer; used to derive independent generator states.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// xoshiro256++ generator with a few distributions implemented in-house so
/// that sampled values are bit-identical across standard libraries.
///
/// Every trajectory gets its own generator through `Rng::for_sample`, keyed
/// on (seed, stream, index). Results therefore do not depend on how samples
/// are distributed over worker threads.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) noexcept {
    std::uint64_t x = seed;
    for (auto& s : state_) {
      x = splitmix64(x);
      s = x;
    }
  }

  static Rng for_sample(std::uint64_t seed, std::uint64_t stream,
                        std::uint64_t index) noexcept {
    return Rng(splitmix64(seed) ^ splitmix64(stream * 0xd1b54a32d192ed03ULL + 1) ^
               splitmix64(index * 0x8cb92ba72f3d8dd7ULL + 7));
  }

  // UniformRandomBitGenerator interface, for Boost distributions.
  using result_type = std::uint64_t;
  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return ~result_type{0}; }
  result_type operator()() noexcept { return next(); }

  std::uint64_t next() noexcept {
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

  /// Uniform on [0, 1).
  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1).
  double uniform_open() noexcept {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  double exponential() noexcept { return -std::log(uniform_open()); }

  /// Standard normal by Box-Muller; the second variate is discarded so the
  /// generator stays stateless apart from the xoshiro words.
  double normal() noexcept {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  bool bernoulli(double p) noexcept { return uniform() < p; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t state_[4];
};

/// Well-known stream identifiers so that different experiment parts never
/// share random numbers by accident.
enum class Stream : std::uint64_t {
  kChain = 1,
  kKinetic = 2,
  kInterface = 3,
  kHatZ = 4,
  kZeta = 5,
  kStable = 6,
  kClock = 7,
  kSemigroup = 8,
  kSolver = 9,
  kForms = 10,
  kTest = 99,
};

inline Rng sample_rng(std::uint64_t seed, Stream stream, std::uint64_t index) noexcept {
  return Rng::for_sample(seed, static_cast<std::uint64_t>(stream), index);
}

/// Number of worker threads. Read from KINSTAB_WORKERS; never affects results.
unsigned worker_count();

/// Runs body(i) for i in [0, n) over `worker_count()` threads. Each index is
/// visited exactly once; callers write results into per-index slots.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

}  // namespace kinstab
