#pragma once

#include <string>

#include "tsnmf/matrix_io.hpp"

namespace tsnmf::tsqr {

/// Upper-triangular n x n factor with a nonnegative diagonal.
class TriangularFactor {
public:
  TriangularFactor() = default;
  /// Validates shape and triangularity. Negative diagonal entries are fixed
  /// by flipping the corresponding row, which leaves R^T R unchanged.
  explicit TriangularFactor(Matrix r);

  static TriangularFactor zero(Eigen::Index n);

  Eigen::Index n() const { return r_.cols(); }
  const Matrix& matrix() const { return r_; }

private:
  Matrix r_;
};

enum class NormKind { none, l1, l2 };
const char* to_string(NormKind kind);
NormKind parse_norm_kind(const std::string& text);

/// Per-column partial sums, mergeable in any tree shape.
struct ColumnSums {
  Vector abs_sum;
  Vector sq_sum;

  static ColumnSums zero(Eigen::Index n);
};

ColumnSums column_sums(const matio::RowChunk& chunk);
ColumnSums merge(const ColumnSums& a, const ColumnSums& b);

struct ColumnStats {
  Vector l1;
  Vector l2;

  static ColumnStats from_sums(const ColumnSums& sums);
  const Vector& norms(NormKind kind) const;
};

struct ReducedSVD {
  Vector singular_values;  // nonincreasing
  Matrix right_vectors_t;  // V^T

  /// Sigma V^T, the n x n matrix handed to selection.
  Matrix reduced() const;
};

/// R of a single chunk via Householder QR; rows beyond the chunk height are
/// zero when the chunk has fewer rows than columns.
TriangularFactor factor_chunk(const matio::RowChunk& chunk);
TriangularFactor factor_rows(const Matrix& rows);

/// R of the stacked pair [a; b]. Exploits the triangular structure of both
/// operands, O(n^3 / 3) work.
TriangularFactor combine(const TriangularFactor& a, const TriangularFactor& b);

ReducedSVD rsvd(const TriangularFactor& r);

/// R D^{-1}: the triangular factor of the column-normalized data.
TriangularFactor apply_column_scaling(const TriangularFactor& r,
                                      const ColumnStats& stats, NormKind kind);

/// Divides each column of m by norms(j); throws DataError naming every
/// zero-norm column.
Matrix scale_columns(const Matrix& m, const Vector& norms);

}  // namespace tsnmf::tsqr
