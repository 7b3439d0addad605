#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

#include "tsnmf/carry_tree.hpp"
#include "tsnmf/matrix_io.hpp"
#include "tsnmf/tsqr.hpp"

namespace tsnmf::sketch {

/// G^T X for a k x n sketch. The Gaussian vector of global row i depends only
/// on (seed, i).
struct SketchResult {
  std::uint64_t seed = 0;
  Matrix entries;       // k x n
  bool scaled = false;  // columns divided by l1 norms

  Eigen::Index k() const { return entries.rows(); }
  Eigen::Index n() const { return entries.cols(); }

  static SketchResult zero(Eigen::Index k, Eigen::Index n, std::uint64_t seed);
};

/// Writes g_i (length out.size()) for global row i.
using GaussianRows =
    std::function<void(std::uint64_t row, std::span<double> out)>;

GaussianRows counter_gaussians(std::uint64_t seed);

/// k = ceil(2 r ln max(r, 2)).
std::size_t default_sketch_rows(std::size_t r);

SketchResult sketch_chunk(const matio::RowChunk& chunk, std::size_t k,
                          std::uint64_t seed);
/// Same, with the Gaussian rows supplied by the caller (test hook).
SketchResult sketch_chunk(const matio::RowChunk& chunk, std::size_t k,
                          std::uint64_t seed, const GaussianRows& gaussians);

SketchResult merge(const SketchResult& a, const SketchResult& b);

/// (G^T X) D^{-1} with D = diag(l1): the sketch of the l1-normalized data.
SketchResult scale_columns(const SketchResult& s,
                           const tsqr::ColumnStats& stats);

/// Rows are grouped into fixed blocks aligned on global row index; each block
/// is sketched with one fixed-shape product and blocks merge through a
/// CarryTree keyed by block index. The result is therefore bitwise identical
/// for every chunk partition of the input.
inline constexpr std::size_t kBlockRows = 256;

/// Sketch contributions of one chunk: blocks the chunk covers completely,
/// plus raw rows of blocks it only touches partially.
struct ChunkContribution {
  std::uint64_t first_block = 0;      // block index of blocks.front()
  std::vector<SketchResult> blocks;
  matio::RowChunk head;               // rows of a block that began earlier
  matio::RowChunk tail;               // rows of a block that continues later
};

/// Pure, parallel-safe worker step.
ChunkContribution contribute(const matio::RowChunk& chunk, std::size_t k,
                             std::uint64_t seed,
                             std::size_t block_rows = kBlockRows);

/// Consumes contributions in chunk order; single-threaded.
class SketchAssembler {
public:
  SketchAssembler(std::size_t k, Eigen::Index n, std::uint64_t seed,
                  std::size_t block_rows = kBlockRows);

  void add(ChunkContribution contribution);
  SketchResult finish();

  std::size_t blocks() const { return tree_.count(); }
  std::size_t tree_depth() const { return tree_.depth(); }

private:
  void take_partial(matio::RowChunk rows);
  void flush_partial();

  struct Merge {
    SketchResult operator()(SketchResult a, SketchResult b) const {
      return merge(a, b);
    }
  };

  std::size_t k_;
  Eigen::Index n_;
  std::uint64_t seed_;
  std::size_t block_rows_;
  std::vector<double> partial_;
  std::uint64_t partial_offset_ = 0;
  std::size_t partial_rows_ = 0;
  CarryTree<SketchResult, Merge> tree_;
};

}  // namespace tsnmf::sketch
