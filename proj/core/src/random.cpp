#include "loec/random.hpp"

#include <cmath>
#include <numbers>

namespace loec {
namespace {

double to_unit(std::uint64_t bits) noexcept {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

double box_muller(double u1, double u2) noexcept {
  // u1 in (0, 1] keeps the log finite.
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  return mix64(mix64(seed) ^ (stream * 0xd6e8feb86659fd93ULL + 0x632be59bd9b4e019ULL));
}

double Rng::uniform() { return to_unit(engine_()); }

int Rng::uniform_int(int n) {
  if (n <= 1) return 0;
  const auto v = static_cast<int>(uniform() * n);
  return v < n ? v : n - 1;
}

double Rng::normal() {
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return box_muller(u1, u2);
}

double counter_uniform(std::uint64_t key, std::uint64_t counter) noexcept {
  return to_unit(mix64(key ^ mix64(counter)));
}

double counter_normal(std::uint64_t key, std::uint64_t counter) noexcept {
  const std::uint64_t base = mix64(key ^ mix64(counter));
  const double u1 = 1.0 - to_unit(base);
  const double u2 = to_unit(mix64(base));
  return box_muller(u1, u2);
}

}  // namespace loec
