#pragma once

#include <cstdint>
#include <optional>

#include "tsnmf/matrix_io.hpp"
#include "tsnmf/sketch.hpp"
#include "tsnmf/tsqr.hpp"

namespace tsnmf::tsqr {

enum class CombineOrder {
  /// Balanced binary tree over chunk indices; bitwise reproducible.
  balanced_tree,
  /// Fold R factors as workers finish. Column sums and the sketch still merge
  /// in chunk order.
  first_come,
};

struct PassOptions {
  std::optional<std::size_t> sketch_rows;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  CombineOrder order = CombineOrder::balanced_tree;
};

/// What one traversal cost; printed by the CLI in verbose mode.
struct PassLedger {
  std::uint64_t rows = 0;
  std::uint64_t chunks = 0;
  std::uint64_t bytes_read = 0;
  std::size_t tree_depth = 0;
  std::size_t sketch_blocks = 0;
  std::uint64_t reduced_bytes = 0;  // bytes of R, stats and sketch produced
  std::uint64_t content_hash = 0;
};

struct PassResult {
  TriangularFactor r;
  ColumnStats stats;
  std::optional<sketch::SketchResult> sketch;
  PassLedger ledger;
};

/// One traversal of the reader producing R, column norms and optionally the
/// Gaussian sketch. Throws DataError when the matrix has fewer rows than
/// columns ("not tall-and-skinny").
PassResult stream_pass(matio::ChunkReader& reader, const PassOptions& options = {});

}  // namespace tsnmf::tsqr
