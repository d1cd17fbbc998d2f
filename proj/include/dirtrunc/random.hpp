#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dirtrunc {

/// Default random source. Every sampling routine is templated on a
/// UniformRandomBitGenerator, so any engine can be substituted.
using RandomSource = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for an independent stream, derived from a master seed by a counter.
/// `stream` separates samplers (or other consumers); `index` is the chain.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream,
                                    std::uint64_t index) noexcept {
  return splitmix64(splitmix64(master ^ splitmix64(stream)) + index);
}

inline RandomSource make_random_source(std::uint64_t seed) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32)};
  return RandomSource(seq);
}

/// log of a Gamma(shape, 1) draw.
///
/// For shape < 1 the draw is boosted: G(a) = G(a+1) * U^(1/a), taken in log
/// space so that tiny shapes never underflow to an exact zero.
template <class Rng>
double sample_log_gamma(double shape, Rng& rng) {
  if (shape >= 1.0) {
    std::gamma_distribution<double> g(shape, 1.0);
    double x = g(rng);
    while (x <= 0.0) x = g(rng);
    return std::log(x);
  }
  std::gamma_distribution<double> g(shape + 1.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double x = g(rng);
  while (x <= 0.0) x = g(rng);
  double v = u(rng);
  while (v <= 0.0) v = u(rng);
  return std::log(x) + std::log(v) / shape;
}

}  // namespace dirtrunc
