#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

namespace tsnmf {

/// Order-preserving reduction shaped like a binary counter: after pushing
/// items 0..N-1, every power-of-two aligned run has been combined as a
/// balanced subtree, and finish() folds the leftover runs right to left.
/// The tree depends only on N, so serial and parallel producers that push in
/// index order get bitwise identical results. Memory is O(log N) items.
///
/// combine(earlier, later) receives operands in index order.
template <typename T, typename Combine>
class CarryTree {
public:
  explicit CarryTree(Combine combine) : combine_(std::move(combine)) {}

  void push(T value) {
    std::size_t level = 0;
    while (level < levels_.size() && levels_[level]) {
      value = combine_(std::move(*levels_[level]), std::move(value));
      levels_[level].reset();
      ++level;
    }
    if (level == levels_.size()) levels_.emplace_back();
    levels_[level] = std::move(value);
    ++count_;
  }

  std::optional<T> finish() {
    std::optional<T> acc;
    for (auto& slot : levels_) {
      if (!slot) continue;
      acc = acc ? combine_(std::move(*slot), std::move(*acc)) : std::move(*slot);
      slot.reset();
    }
    return acc;
  }

  std::size_t count() const { return count_; }

  /// Height of the reduction tree over the items pushed so far.
  std::size_t depth() const {
    std::size_t height = 0;
    while ((std::size_t{1} << height) < count_) ++height;
    return height;
  }

private:
  Combine combine_;
  std::vector<std::optional<T>> levels_;
  std::size_t count_ = 0;
};

}  // namespace tsnmf
