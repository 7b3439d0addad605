#include "tsnmf/sketch.hpp"

#include <cmath>

#include "tsnmf/error.hpp"
#include "tsnmf/random.hpp"

namespace tsnmf::sketch {

SketchResult SketchResult::zero(Eigen::Index k, Eigen::Index n,
                                std::uint64_t seed) {
  return {seed, Matrix::Zero(k, n), false};
}

GaussianRows counter_gaussians(std::uint64_t seed) {
  return [seed](std::uint64_t row, std::span<double> out) {
    rng::normal_row(seed, rng::Stream::sketch, row, out.data(), out.size());
  };
}

std::size_t default_sketch_rows(std::size_t r) {
  const double rr = static_cast<double>(std::max<std::size_t>(r, 2));
  return static_cast<std::size_t>(
      std::ceil(2.0 * static_cast<double>(r) * std::log(rr)));
}

SketchResult sketch_chunk(const matio::RowChunk& chunk, std::size_t k,
                          std::uint64_t seed) {
  return sketch_chunk(chunk, k, seed, counter_gaussians(seed));
}

SketchResult sketch_chunk(const matio::RowChunk& chunk, std::size_t k,
                          std::uint64_t seed, const GaussianRows& gaussians) {
  if (k == 0) throw UsageError("sketch rows must be >= 1");
  RowMatrix g(chunk.rows(), static_cast<Eigen::Index>(k));
  for (Eigen::Index i = 0; i < chunk.rows(); ++i) {
    gaussians(chunk.row_offset + static_cast<std::uint64_t>(i),
              std::span<double>(g.row(i).data(), k));
  }
  SketchResult s;
  s.seed = seed;
  s.entries.noalias() = g.transpose() * chunk.data;
  return s;
}

SketchResult merge(const SketchResult& a, const SketchResult& b) {
  if (a.seed != b.seed) throw UsageError("sketch merge: seed mismatch");
  if (a.k() != b.k() || a.n() != b.n()) {
    throw UsageError("sketch merge: shape mismatch");
  }
  if (a.scaled != b.scaled) {
    throw UsageError("sketch merge: scaled and unscaled operands");
  }
  return {a.seed, a.entries + b.entries, a.scaled};
}

SketchResult scale_columns(const SketchResult& s,
                           const tsqr::ColumnStats& stats) {
  if (s.scaled) throw UsageError("sketch is already column-scaled");
  return {s.seed, tsqr::scale_columns(s.entries, stats.l1), true};
}

namespace {

matio::RowChunk slice(const matio::RowChunk& chunk, Eigen::Index begin,
                      Eigen::Index rows) {
  return {chunk.row_offset + static_cast<std::uint64_t>(begin),
          chunk.data.middleRows(begin, rows)};
}

}  // namespace

ChunkContribution contribute(const matio::RowChunk& chunk, std::size_t k,
                             std::uint64_t seed, std::size_t block_rows) {
  const std::uint64_t b = block_rows;
  const std::uint64_t begin = chunk.row_offset;
  const std::uint64_t end = begin + static_cast<std::uint64_t>(chunk.rows());

  ChunkContribution out;
  out.head.row_offset = begin;
  out.tail.row_offset = end;
  out.head.data.resize(0, chunk.cols());
  out.tail.data.resize(0, chunk.cols());

  std::uint64_t first_full = (begin + b - 1) / b;
  std::uint64_t head_end = std::min(first_full * b, end);
  if (head_end > begin) {
    out.head = slice(chunk, 0, static_cast<Eigen::Index>(head_end - begin));
  }
  out.first_block = first_full;
  std::uint64_t row = head_end;
  while (row + b <= end) {
    out.blocks.push_back(sketch_chunk(
        slice(chunk, static_cast<Eigen::Index>(row - begin),
              static_cast<Eigen::Index>(b)),
        k, seed));
    row += b;
  }
  if (row < end) {
    out.tail = slice(chunk, static_cast<Eigen::Index>(row - begin),
                     static_cast<Eigen::Index>(end - row));
  }
  return out;
}

SketchAssembler::SketchAssembler(std::size_t k, Eigen::Index n,
                                 std::uint64_t seed, std::size_t block_rows)
    : k_(k), n_(n), seed_(seed), block_rows_(block_rows), tree_(Merge{}) {
  if (k == 0) throw UsageError("sketch rows must be >= 1");
  if (block_rows == 0) throw UsageError("block rows must be >= 1");
}

void SketchAssembler::take_partial(matio::RowChunk rows) {
  if (rows.rows() == 0) return;
  if (partial_rows_ == 0) {
    partial_offset_ = rows.row_offset;
  } else if (partial_offset_ + partial_rows_ != rows.row_offset) {
    throw UsageError("sketch contributions arrived out of order");
  }
  partial_.insert(partial_.end(), rows.data.data(),
                  rows.data.data() + rows.data.size());
  partial_rows_ += static_cast<std::size_t>(rows.rows());
  const bool aligned_end =
      (partial_offset_ + partial_rows_) % block_rows_ == 0;
  if (aligned_end) flush_partial();
}

void SketchAssembler::flush_partial() {
  if (partial_rows_ == 0) return;
  matio::RowChunk block;
  block.row_offset = partial_offset_;
  block.data = Eigen::Map<const RowMatrix>(
      partial_.data(), static_cast<Eigen::Index>(partial_rows_), n_);
  tree_.push(sketch_chunk(block, k_, seed_));
  partial_.clear();
  partial_rows_ = 0;
}

void SketchAssembler::add(ChunkContribution contribution) {
  take_partial(std::move(contribution.head));
  if (!contribution.blocks.empty() && partial_rows_ != 0) {
    throw UsageError("sketch contributions arrived out of order");
  }
  for (auto& block : contribution.blocks) tree_.push(std::move(block));
  take_partial(std::move(contribution.tail));
}

SketchResult SketchAssembler::finish() {
  flush_partial();
  auto result = tree_.finish();
  if (!result) return SketchResult::zero(static_cast<Eigen::Index>(k_), n_, seed_);
  return std::move(*result);
}

}  // namespace tsnmf::sketch
