#pragma once

#include <cstdint>
#include <random>

namespace loec {

/// splitmix64 finaliser; a good 64-bit mixing function.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Combines a seed with a stream/counter value into a fresh 64-bit key.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

/// Sequential generator. Distributions are implemented here rather than via
/// <random> adaptors so that sequences are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  int uniform_int(int n);
  /// Standard normal via Box-Muller.
  double normal();

 private:
  std::mt19937_64 engine_;
};

/// Counter-based Gaussian: the value depends only on (key, counter), so draws
/// can be taken in any order or in parallel.
double counter_normal(std::uint64_t key, std::uint64_t counter) noexcept;
double counter_uniform(std::uint64_t key, std::uint64_t counter) noexcept;

}  // namespace loec
