#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "tsnmf/matrix_io.hpp"

namespace tsnmf::matio {

enum class PermutationKind {
  identity,
  /// Swap columns i and 10i for i = 2, ..., r-1, in that order.
  swap_tenfold,
};

/// X = W [I_r H'] Π + N with W, H' ~ U[0, 1] and N ~ U[0, noise].
struct SyntheticSpec {
  std::uint64_t m = 0;
  std::uint32_t n = 0;
  std::uint32_t r = 0;
  double noise = 0.0;
  std::uint64_t seed = 0;
  PermutationKind permutation = PermutationKind::swap_tenfold;

  void validate() const;

  /// source[c] = column of [I_r H'] that lands in column c of X.
  std::vector<std::uint32_t> column_sources() const;

  /// Ground-truth extreme columns; element p is the column of X that equals
  /// column p of W (before noise).
  std::vector<std::uint32_t> extreme_columns() const;

  /// The r x n coefficient matrix [I_r H'] Π. Row p pairs with W(:, p).
  Matrix true_coefficients() const;
};

struct GeneratedMatrix {
  MatrixHeader header;
  std::vector<std::uint32_t> extremes;
};

/// Streams X to `path` chunk by chunk. Entry values depend only on
/// (seed, row, column), never on chunk_rows.
GeneratedMatrix generate_separable(const SyntheticSpec& spec,
                                   const std::filesystem::path& path,
                                   std::size_t chunk_rows = kDefaultChunkRows);

/// Writes the m_a^2 x n_a^2 matrix whose row i*m_a + j is kron(A(i,:), A(j,:)).
MatrixHeader expand_kronecker(const std::filesystem::path& input,
                              const std::filesystem::path& output,
                              TextOptions text = {});

/// Dense A ⊗ A with the same row convention, for small inputs.
Matrix kronecker_rows(const Matrix& a);

}  // namespace tsnmf::matio
