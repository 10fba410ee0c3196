#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <vector>

namespace cfrank {

/// Binary indexed tree over positions 0..n-1 supporting point updates and
/// prefix sums in O(log n).
template <class T>
class FenwickTree {
 public:
  explicit FenwickTree(std::size_t n = 0) : tree_(n + 1, T{}) {}

  std::size_t size() const noexcept { return tree_.size() - 1; }

  void add(std::size_t pos, T delta) {
    assert(pos < size());
    total_ += delta;
    for (std::size_t i = pos + 1; i < tree_.size(); i += i & (~i + 1)) tree_[i] += delta;
  }

  /// Sum of positions [0, end).
  T prefix(std::size_t end) const {
    assert(end <= size());
    T s{};
    for (std::size_t i = end; i > 0; i -= i & (~i + 1)) s += tree_[i];
    return s;
  }

  /// Sum of positions [begin, n), as total minus prefix.
  T suffix(std::size_t begin) const { return total_ - prefix(begin); }

  T total() const noexcept { return total_; }

  void clear() {
    std::fill(tree_.begin(), tree_.end(), T{});
    total_ = T{};
  }

 private:
  std::vector<T> tree_;
  T total_{};
};

/// Per-level running count, sum and sum of squares of inserted values,
/// queried over level ranges. Used by the sorted-scan ranking kernels.
class LevelAccumulator {
 public:
  explicit LevelAccumulator(std::size_t levels)
      : count_(levels), sum_(levels), sumsq_(levels) {}

  struct Stats {
    double count = 0.0;
    double sum = 0.0;
    double sumsq = 0.0;
  };

  void insert(std::size_t level, double value, bool track_squares = false) {
    count_.add(level, 1.0);
    sum_.add(level, value);
    if (track_squares) sumsq_.add(level, value * value);
  }

  /// Levels strictly below `level`.
  Stats below(std::size_t level) const {
    return {count_.prefix(level), sum_.prefix(level), sumsq_.prefix(level)};
  }
  /// Levels strictly above `level`.
  Stats above(std::size_t level) const {
    return {count_.suffix(level + 1), sum_.suffix(level + 1), sumsq_.suffix(level + 1)};
  }

  void clear() {
    count_.clear();
    sum_.clear();
    sumsq_.clear();
  }

 private:
  FenwickTree<double> count_;
  FenwickTree<double> sum_;
  FenwickTree<double> sumsq_;
};

}  // namespace cfrank
