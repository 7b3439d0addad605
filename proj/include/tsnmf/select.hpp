#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tsnmf/matrix_io.hpp"
#include "tsnmf/sketch.hpp"

namespace tsnmf::select {

enum class Algorithm { spa, xray, gp };

const char* to_string(Algorithm a);
Algorithm parse_algorithm(const std::string& text);

/// Selected extreme columns in selection order.
struct ExtremeSet {
  Algorithm algorithm = Algorithm::spa;
  std::size_t requested = 0;
  std::vector<Eigen::Index> indices;

  /// requested - indices.size(): nonzero when the algorithm ran out of
  /// candidates (GP) or of residual (SPA) before reaching the request.
  std::size_t shortfall() const { return requested - indices.size(); }

  /// First r selections, for sweeping nested selections.
  ExtremeSet prefix(std::size_t r) const;
};

/// Relative threshold below which the SPA residual counts as zero.
inline constexpr double kSpaZeroResidual = 1e-12;

/// Successive projection: pick the largest remaining column, project it out
/// of every column, repeat. Column scaling (if any) is the caller's job; see
/// tsqr::apply_column_scaling. Stops early, with a shortfall, once every
/// residual column norm drops below kSpaZeroResidual times the largest
/// initial one.
ExtremeSet spa(const Matrix& reduced, std::size_t r);

/// Greedy XRAY: score_j = ||Res^T M(:, j)|| / ||M(:, j)|| with Res the
/// residual of an NNLS refit on the current selection.
ExtremeSet xray_greedy(const Matrix& reduced, std::size_t r);

/// Per-row argmin then argmax of a column-scaled sketch, skipping
/// duplicates, until r columns are found or the rows run out.
ExtremeSet gp_select(const sketch::SketchResult& sketch, std::size_t r);

}  // namespace tsnmf::select
