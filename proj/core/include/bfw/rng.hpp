#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "bfw/math_util.hpp"

namespace bfw {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent, reproducible generator for (global seed, component tag, index).
// Every stochastic component in the engine draws from a stream keyed this way, so
// ensemble members and chains stay decoupled no matter how work is scheduled.
inline std::mt19937_64 derive_stream(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) {
  std::uint64_t h = splitmix64(seed);
  for (char c : tag) h = splitmix64(h ^ static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
  h = splitmix64(h ^ index);
  return std::mt19937_64(h);
}

inline double draw_uniform(std::mt19937_64& rng, double lo = 0.0, double hi = 1.0) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

inline double draw_normal(std::mt19937_64& rng, double mean = 0.0, double sd = 1.0) {
  return std::normal_distribution<double>(mean, sd)(rng);
}

inline double draw_half_normal(std::mt19937_64& rng, double scale) {
  return std::fabs(draw_normal(rng, 0.0, scale));
}

// Normal truncated to x > 0 by rejection.
inline double draw_positive_normal(std::mt19937_64& rng, double mean, double sd) {
  double x = -1.0;
  while (x < 0.0) x = draw_normal(rng, mean, sd);
  return x;
}

// Marginal correlation of a 2x2 LKJ(eta) matrix: (rho+1)/2 ~ Beta(eta, eta).
inline double draw_lkj_corr2(std::mt19937_64& rng, double eta) {
  std::gamma_distribution<double> g(eta, 1.0);
  const double a = g(rng);
  const double b = g(rng);
  return 2.0 * (a / (a + b)) - 1.0;
}

}  // namespace bfw
