#include "tsnmf/tsqr.hpp"

#include <cmath>
#include <sstream>

#include "tsnmf/error.hpp"

namespace tsnmf::tsqr {

namespace {

void fix_signs(Matrix& r) {
  for (Eigen::Index i = 0; i < r.rows(); ++i) {
    if (r(i, i) < 0.0) r.row(i) *= -1.0;
  }
}

}  // namespace

TriangularFactor::TriangularFactor(Matrix r) : r_(std::move(r)) {
  if (r_.rows() != r_.cols()) {
    throw DataError("triangular factor must be square, got " +
                    std::to_string(r_.rows()) + "x" + std::to_string(r_.cols()));
  }
  for (Eigen::Index j = 0; j < r_.cols(); ++j) {
    for (Eigen::Index i = j + 1; i < r_.rows(); ++i) {
      if (r_(i, j) != 0.0) {
        throw DataError("triangular factor has a nonzero below the diagonal");
      }
    }
  }
  fix_signs(r_);
}

TriangularFactor TriangularFactor::zero(Eigen::Index n) {
  return TriangularFactor(Matrix::Zero(n, n));
}

const char* to_string(NormKind kind) {
  switch (kind) {
    case NormKind::none: return "none";
    case NormKind::l1: return "l1";
    case NormKind::l2: return "l2";
  }
  return "none";
}

NormKind parse_norm_kind(const std::string& text) {
  if (text == "none") return NormKind::none;
  if (text == "l1") return NormKind::l1;
  if (text == "l2") return NormKind::l2;
  throw UsageError("unknown norm kind '" + text + "'");
}

ColumnSums ColumnSums::zero(Eigen::Index n) {
  return {Vector::Zero(n), Vector::Zero(n)};
}

ColumnSums column_sums(const matio::RowChunk& chunk) {
  ColumnSums sums;
  sums.abs_sum = chunk.data.cwiseAbs().colwise().sum().transpose();
  sums.sq_sum = chunk.data.cwiseAbs2().colwise().sum().transpose();
  return sums;
}

ColumnSums merge(const ColumnSums& a, const ColumnSums& b) {
  if (a.abs_sum.size() != b.abs_sum.size()) {
    throw UsageError("column sums dimension mismatch");
  }
  return {a.abs_sum + b.abs_sum, a.sq_sum + b.sq_sum};
}

ColumnStats ColumnStats::from_sums(const ColumnSums& sums) {
  return {sums.abs_sum, sums.sq_sum.cwiseSqrt()};
}

const Vector& ColumnStats::norms(NormKind kind) const {
  if (kind == NormKind::l1) return l1;
  if (kind == NormKind::l2) return l2;
  throw UsageError("no norms for kind 'none'");
}

Matrix ReducedSVD::reduced() const {
  return singular_values.asDiagonal() * right_vectors_t;
}

TriangularFactor factor_rows(const Matrix& rows) {
  const auto n = rows.cols();
  Matrix r = Matrix::Zero(n, n);
  if (rows.rows() == 0) return TriangularFactor(std::move(r));

  Eigen::HouseholderQR<Matrix> qr(rows);
  const auto height = std::min(rows.rows(), n);
  r.topRows(height) =
      qr.matrixQR().topRows(height).triangularView<Eigen::Upper>();
  return TriangularFactor(std::move(r));
}

TriangularFactor factor_chunk(const matio::RowChunk& chunk) {
  return factor_rows(Matrix(chunk.data));
}

TriangularFactor combine(const TriangularFactor& a, const TriangularFactor& b) {
  if (a.n() != b.n()) {
    throw UsageError("combine: dimension mismatch " + std::to_string(a.n()) +
                     " vs " + std::to_string(b.n()));
  }
  const auto n = a.n();
  Matrix top = a.matrix();
  Matrix bottom = b.matrix();

  // Column j of the stack has nonzeros only at top(j, j) and bottom(0..j, j);
  // one Householder reflector of length j + 2 clears the bottom part.
  Vector v;
  for (Eigen::Index j = 0; j < n; ++j) {
    auto tail = bottom.col(j).head(j + 1);
    const double sigma = tail.squaredNorm();
    if (sigma == 0.0) continue;

    const double alpha = top(j, j);
    const double mu = std::sqrt(alpha * alpha + sigma);
    const double v0 = alpha <= 0.0 ? alpha - mu : -sigma / (alpha + mu);
    const double tau = 2.0 * v0 * v0 / (sigma + v0 * v0);
    v = tail / v0;

    for (Eigen::Index k = j + 1; k < n; ++k) {
      auto col = bottom.col(k).head(j + 1);
      const double w = top(j, k) + v.dot(col);
      top(j, k) -= tau * w;
      col -= (tau * w) * v;
    }
    top(j, j) = mu;
    tail.setZero();
  }
  return TriangularFactor(std::move(top));
}

ReducedSVD rsvd(const TriangularFactor& r) {
  Eigen::JacobiSVD<Matrix> svd(r.matrix(), Eigen::ComputeFullV);
  return {svd.singularValues(), svd.matrixV().transpose()};
}

Matrix scale_columns(const Matrix& m, const Vector& norms) {
  if (norms.size() != m.cols()) {
    throw UsageError("column scaling: norm vector has wrong length");
  }
  std::vector<Eigen::Index> zero;
  for (Eigen::Index j = 0; j < norms.size(); ++j) {
    if (!(norms(j) > 0.0)) zero.push_back(j);
  }
  if (!zero.empty()) {
    std::ostringstream msg;
    msg << (zero.size() == 1 ? "column " : "columns ");
    for (std::size_t i = 0; i < zero.size(); ++i) {
      msg << (i ? ", " : "") << zero[i];
    }
    msg << (zero.size() == 1 ? " has" : " have") << " zero norm";
    throw DataError(msg.str());
  }
  return m * norms.cwiseInverse().asDiagonal();
}

TriangularFactor apply_column_scaling(const TriangularFactor& r,
                                      const ColumnStats& stats, NormKind kind) {
  if (kind == NormKind::none) return r;
  return TriangularFactor(scale_columns(r.matrix(), stats.norms(kind)));
}

}  // namespace tsnmf::tsqr
