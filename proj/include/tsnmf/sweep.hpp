#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tsnmf/nnls.hpp"
#include "tsnmf/select.hpp"
#include "tsnmf/sketch.hpp"
#include "tsnmf/tsqr.hpp"

namespace tsnmf::nnls {

enum class Reduction { qr, svd };
const char* to_string(Reduction r);
Reduction parse_reduction(const std::string& text);

/// Everything selection and NNLS need after the single pass: n x n data plus
/// the optional k x n sketch. Never touches the big matrix.
class ReducedProblem {
public:
  ReducedProblem(tsqr::TriangularFactor r, tsqr::ColumnStats stats,
                 std::optional<sketch::SketchResult> sketch,
                 Reduction reduction = Reduction::svd,
                 tsqr::NormKind spa_norm = tsqr::NormKind::l1);

  /// R or Sigma V^T.
  const Matrix& reduced() const { return reduced_; }
  const tsqr::TriangularFactor& r() const { return r_; }
  const tsqr::ColumnStats& stats() const { return stats_; }
  const std::optional<sketch::SketchResult>& sketch() const { return sketch_; }
  Reduction reduction() const { return reduction_; }
  tsqr::NormKind spa_norm() const { return spa_norm_; }
  Eigen::Index n() const { return reduced_.cols(); }

  select::ExtremeSet select(select::Algorithm algorithm, std::size_t r) const;

private:
  tsqr::TriangularFactor r_;
  tsqr::ColumnStats stats_;
  std::optional<sketch::SketchResult> sketch_;
  Reduction reduction_;
  tsqr::NormKind spa_norm_;
  Matrix reduced_;
};

struct Factorization {
  select::ExtremeSet extremes;
  CoefficientMatrix h;
  double residual = 0.0;
};

Factorization factorize(const ReducedProblem& problem,
                        select::Algorithm algorithm, std::size_t r);
/// H and residual for an already chosen extreme set.
Factorization evaluate(const ReducedProblem& problem, select::ExtremeSet k);

struct SweepCell {
  std::size_t r = 0;
  select::Algorithm algorithm = select::Algorithm::spa;
  std::optional<double> residual;
  std::vector<Eigen::Index> indices;
  std::size_t shortfall = 0;
  double seconds = 0.0;
  std::string error;
};

struct SweepReport {
  std::vector<SweepCell> cells;
  /// Selection time per algorithm; selections are nested, so each algorithm
  /// runs once at max(r) and every cell uses a prefix.
  std::vector<std::pair<select::Algorithm, double>> selection_seconds;

  std::optional<double> residual(select::Algorithm algorithm,
                                 std::size_t r) const;
};

SweepReport sweep(const ReducedProblem& problem,
                  std::span<const select::Algorithm> algorithms,
                  std::span<const std::size_t> r_values);

}  // namespace tsnmf::nnls
