#include "tsnmf/stream_pass.hpp"

#include <condition_variable>
#include <deque>
#include <exception>
#include <map>
#include <mutex>
#include <thread>

#include "tsnmf/carry_tree.hpp"
#include "tsnmf/error.hpp"

namespace tsnmf::tsqr {

namespace {

struct ChunkOutput {
  std::size_t index = 0;
  TriangularFactor r;
  ColumnSums sums;
  std::optional<sketch::ChunkContribution> sketch;
  std::exception_ptr error;
};

ChunkOutput process(std::size_t index, const matio::RowChunk& chunk,
                    const PassOptions& options) {
  ChunkOutput out;
  out.index = index;
  try {
    out.r = factor_chunk(chunk);
    out.sums = column_sums(chunk);
    if (options.sketch_rows) {
      out.sketch = sketch::contribute(chunk, *options.sketch_rows, options.seed);
    }
  } catch (...) {
    out.error = std::current_exception();
  }
  return out;
}

template <typename T>
class BlockingQueue {
public:
  explicit BlockingQueue(std::size_t capacity) : capacity_(capacity) {}

  void push(T item) {
    std::unique_lock lock(mutex_);
    not_full_.wait(lock, [&] { return items_.size() < capacity_ || closed_; });
    items_.push_back(std::move(item));
    not_empty_.notify_one();
  }

  std::optional<T> pop() {
    std::unique_lock lock(mutex_);
    not_empty_.wait(lock, [&] { return !items_.empty() || closed_; });
    if (items_.empty()) return std::nullopt;
    T item = std::move(items_.front());
    items_.pop_front();
    not_full_.notify_one();
    return item;
  }

  void close() {
    std::lock_guard lock(mutex_);
    closed_ = true;
    not_empty_.notify_all();
    not_full_.notify_all();
  }

private:
  std::size_t capacity_;
  std::deque<T> items_;
  bool closed_ = false;
  std::mutex mutex_;
  std::condition_variable not_empty_;
  std::condition_variable not_full_;
};

struct CombineR {
  TriangularFactor operator()(const TriangularFactor& a,
                              const TriangularFactor& b) const {
    return combine(a, b);
  }
};

struct MergeSums {
  ColumnSums operator()(const ColumnSums& a, const ColumnSums& b) const {
    return merge(a, b);
  }
};

/// Folds chunk outputs into the three reductions.
class Reducer {
public:
  Reducer(Eigen::Index n, const PassOptions& options)
      : options_(options), r_tree_(CombineR{}), sums_tree_(MergeSums{}) {
    if (options.sketch_rows) {
      assembler_.emplace(*options.sketch_rows, n, options.seed);
    }
  }

  void accept(ChunkOutput out) {
    if (out.error) std::rethrow_exception(out.error);
    if (options_.order == CombineOrder::first_come) {
      r_running_ = r_running_ ? combine(*r_running_, out.r) : out.r;
      ++first_come_count_;
    }
    pending_.emplace(out.index, std::move(out));
    for (auto it = pending_.find(next_); it != pending_.end();
         it = pending_.find(next_)) {
      auto& ready = it->second;
      if (options_.order == CombineOrder::balanced_tree) {
        r_tree_.push(std::move(ready.r));
      }
      sums_tree_.push(std::move(ready.sums));
      if (assembler_) assembler_->add(std::move(*ready.sketch));
      pending_.erase(it);
      ++next_;
    }
  }

  PassResult finish(Eigen::Index n) {
    PassResult result;
    if (options_.order == CombineOrder::first_come) {
      result.r = r_running_ ? *r_running_ : TriangularFactor::zero(n);
      result.ledger.tree_depth = first_come_count_ ? first_come_count_ - 1 : 0;
    } else {
      result.ledger.tree_depth = r_tree_.depth();
      auto r = r_tree_.finish();
      result.r = r ? std::move(*r) : TriangularFactor::zero(n);
    }
    auto sums = sums_tree_.finish();
    result.stats = ColumnStats::from_sums(sums ? *sums : ColumnSums::zero(n));
    if (assembler_) {
      result.ledger.sketch_blocks = assembler_->blocks();
      result.sketch = assembler_->finish();
    }
    return result;
  }

private:
  const PassOptions& options_;
  CarryTree<TriangularFactor, CombineR> r_tree_;
  CarryTree<ColumnSums, MergeSums> sums_tree_;
  std::optional<sketch::SketchAssembler> assembler_;
  std::optional<TriangularFactor> r_running_;
  std::size_t first_come_count_ = 0;
  std::map<std::size_t, ChunkOutput> pending_;
  std::size_t next_ = 0;
};

struct Work {
  std::size_t index;
  matio::RowChunk chunk;
};

void run_serial(matio::ChunkReader& reader, const PassOptions& options,
                Reducer& reducer, std::size_t& chunks) {
  while (auto chunk = reader.next()) {
    reducer.accept(process(chunks++, *chunk, options));
  }
}

void run_parallel(matio::ChunkReader& reader, const PassOptions& options,
                  Reducer& reducer, std::size_t& chunks) {
  const std::size_t workers = options.threads;
  // At most `in_flight` chunks are read but not yet reduced, which bounds
  // memory and guarantees neither queue ever blocks a producer.
  const std::size_t in_flight = 2 * workers;
  BlockingQueue<Work> inbox(in_flight);
  BlockingQueue<ChunkOutput> outbox(in_flight);

  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      while (auto work = inbox.pop()) {
        outbox.push(process(work->index, work->chunk, options));
      }
    });
  }

  std::size_t submitted = 0;
  std::size_t received = 0;
  std::exception_ptr error;
  auto receive_one = [&] {
    auto out = outbox.pop();
    ++received;
    if (error) return;
    try {
      reducer.accept(std::move(*out));
    } catch (...) {
      error = std::current_exception();
    }
  };

  try {
    while (!error) {
      while (submitted - received >= in_flight) receive_one();
      if (error) break;
      auto chunk = reader.next();
      if (!chunk) break;
      inbox.push({submitted++, std::move(*chunk)});
    }
  } catch (...) {
    error = std::current_exception();
  }
  inbox.close();
  while (received < submitted) receive_one();
  for (auto& t : pool) t.join();
  chunks = submitted;
  if (error) std::rethrow_exception(error);
}

}  // namespace

PassResult stream_pass(matio::ChunkReader& reader, const PassOptions& options) {
  const Eigen::Index n = reader.cols();
  if (auto m = reader.declared_rows(); m && *m < static_cast<std::uint64_t>(n)) {
    throw DataError("not tall-and-skinny: m = " + std::to_string(*m) +
                    " < n = " + std::to_string(n));
  }
  if (options.sketch_rows && *options.sketch_rows == 0) {
    throw UsageError("sketch rows must be >= 1");
  }

  const auto rows_before = reader.counters().rows;
  // A fresh reader has consumed only its header, which belongs to this pass.
  const auto bytes_before =
      reader.counters().chunks == 0 ? 0 : reader.counters().bytes;

  Reducer reducer(n, options);
  std::size_t chunks = 0;
  if (options.threads <= 1) {
    run_serial(reader, options, reducer, chunks);
  } else {
    run_parallel(reader, options, reducer, chunks);
  }

  PassResult result = reducer.finish(n);
  result.ledger.rows = reader.counters().rows - rows_before;
  result.ledger.chunks = chunks;
  result.ledger.bytes_read = reader.counters().bytes - bytes_before;
  result.ledger.content_hash = reader.content_hash();
  std::uint64_t reduced = static_cast<std::uint64_t>(n * n + 2 * n);
  if (result.sketch) reduced += static_cast<std::uint64_t>(result.sketch->entries.size());
  result.ledger.reduced_bytes = reduced * sizeof(double);

  if (result.ledger.rows < static_cast<std::uint64_t>(n)) {
    throw DataError("not tall-and-skinny: m = " +
                    std::to_string(result.ledger.rows) + " < n = " +
                    std::to_string(n));
  }
  return result;
}

}  // namespace tsnmf::tsqr
