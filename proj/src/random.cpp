#include "tsnmf/random.hpp"

#include <cmath>
#include <numbers>

namespace tsnmf::rng {

std::uint64_t mix64(std::uint64_t x) {
  // SplitMix64 finalizer.
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash(std::uint64_t seed, Stream stream, std::uint64_t i,
                   std::uint64_t j) {
  std::uint64_t h = mix64(seed);
  h = mix64(h ^ static_cast<std::uint64_t>(stream));
  h = mix64(h ^ i);
  return mix64(h ^ j);
}

namespace {

double to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

void box_muller(std::uint64_t seed, Stream stream, std::uint64_t i,
                std::uint64_t pair, double& c, double& s) {
  std::uint64_t h = hash(seed, stream, i, pair);
  // (0, 1] keeps the logarithm finite.
  double u1 = 1.0 - to_unit(h);
  double u2 = to_unit(mix64(h));
  double radius = std::sqrt(-2.0 * std::log(u1));
  double angle = 2.0 * std::numbers::pi * u2;
  c = radius * std::cos(angle);
  s = radius * std::sin(angle);
}

}  // namespace

double uniform(std::uint64_t seed, Stream stream, std::uint64_t i,
               std::uint64_t j) {
  return to_unit(hash(seed, stream, i, j));
}

double normal(std::uint64_t seed, Stream stream, std::uint64_t i,
              std::uint64_t j) {
  double c, s;
  box_muller(seed, stream, i, j / 2, c, s);
  return (j % 2 == 0) ? c : s;
}

void normal_row(std::uint64_t seed, Stream stream, std::uint64_t i,
                double* out, std::uint64_t k) {
  for (std::uint64_t p = 0; 2 * p < k; ++p) {
    double c, s;
    box_muller(seed, stream, i, p, c, s);
    out[2 * p] = c;
    if (2 * p + 1 < k) out[2 * p + 1] = s;
  }
}

}  // namespace tsnmf::rng
