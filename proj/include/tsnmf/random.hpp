#pragma once

#include <cstdint>

namespace tsnmf::rng {

// Counter-based generation: every draw is a pure function of its key, so the
// value attached to a given matrix entry does not depend on chunking, thread
// count or traversal order.

/// Independent sub-streams sharing one user seed.
enum class Stream : std::uint64_t {
  basis = 1,         // W
  coefficients = 2,  // H'
  noise = 3,         // N
  sketch = 4,        // per-row Gaussian vectors
  test = 99,
};

std::uint64_t mix64(std::uint64_t x);

std::uint64_t hash(std::uint64_t seed, Stream stream, std::uint64_t i,
                   std::uint64_t j);

/// Uniform double in [0, 1) with 53 random bits.
double uniform(std::uint64_t seed, Stream stream, std::uint64_t i,
               std::uint64_t j);

/// Standard normal via Box-Muller. Entry (i, j) consumes the uniform pair
/// keyed by (i, j / 2) and takes the cosine branch for even j, sine for odd.
double normal(std::uint64_t seed, Stream stream, std::uint64_t i,
              std::uint64_t j);

/// Fills out[0..k) with normal(seed, stream, i, 0..k-1), sharing the
/// transcendental work between each Box-Muller pair.
void normal_row(std::uint64_t seed, Stream stream, std::uint64_t i,
                double* out, std::uint64_t k);

}  // namespace tsnmf::rng
