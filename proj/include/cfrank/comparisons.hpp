#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cfrank/ratings.hpp"

namespace cfrank {

/// A comparison expressed with positions into the user's item list.
struct LocalPair {
  std::int32_t p;  // position of j
  std::int32_t q;  // position of k
  double y;        // +1 or -1
};

/// Per-user pairwise comparisons (user, j, k, Y). Besides the raw pairs each
/// user keeps the sorted list of items it touches, and every pair is also
/// stored as positions into that list so kernels can work on dense per-user
/// arrays.
class ComparisonSet {
 public:
  struct Row {
    std::int32_t user;
    std::int32_t j;
    std::int32_t k;
    std::int8_t y;
  };

  ComparisonSet() = default;

  /// All strictly-ordered pairs induced by each user's ratings (ties skipped).
  static ComparisonSet from_ratings(const RatingsMatrix& r);
  /// Explicit pair list; y must be +1 or -1 and j != k.
  static ComparisonSet from_rows(std::size_t n_users, std::size_t n_items, std::vector<Row> rows);

  std::size_t n_users() const noexcept { return n_users_; }
  std::size_t n_items() const noexcept { return n_items_; }
  std::size_t size() const noexcept { return pairs_.size(); }

  std::span<const Comparison> user(std::size_t i) const {
    return {pairs_.data() + pair_ptr_[i], pair_ptr_[i + 1] - pair_ptr_[i]};
  }
  std::span<const LocalPair> local(std::size_t i) const {
    return {local_.data() + pair_ptr_[i], pair_ptr_[i + 1] - pair_ptr_[i]};
  }
  std::span<const std::int32_t> items(std::size_t i) const {
    return {items_.data() + item_ptr_[i], item_ptr_[i + 1] - item_ptr_[i]};
  }

 private:
  void build_local();

  std::size_t n_users_ = 0;
  std::size_t n_items_ = 0;
  std::vector<std::size_t> pair_ptr_{0};
  std::vector<Comparison> pairs_;
  std::vector<LocalPair> local_;
  std::vector<std::size_t> item_ptr_{0};
  std::vector<std::int32_t> items_;
};

/// Reads "user j k Y" lines (ids resolved like ratings files; with no id
/// tables, ids are dense indices and sizes are max id + 1).
ComparisonSet load_comparisons(std::istream& in, const std::vector<std::int64_t>* user_ids = nullptr,
                               const std::vector<std::int64_t>* item_ids = nullptr);
ComparisonSet load_comparisons_file(const std::string& path,
                                    const std::vector<std::int64_t>* user_ids = nullptr,
                                    const std::vector<std::int64_t>* item_ids = nullptr);

}  // namespace cfrank
