#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace cfrank {

enum class FeedbackMode {
  kExplicit,  // integer levels 1..L
  kImplicit,  // 0/1; zeros kept in the observed-zero companion lists
  kReal,      // arbitrary real values (synthetic pointwise data)
};

std::string to_string(FeedbackMode mode);
FeedbackMode parse_feedback_mode(const std::string& s);

struct Rating {
  std::int32_t index;  // item index in a user row, user index in an item column
  double value;

  friend bool operator==(const Rating&, const Rating&) = default;
};

struct Triple {
  std::int32_t user;
  std::int32_t item;
  double value;

  friend bool operator==(const Triple&, const Triple&) = default;
};

/// Sparse user x item ratings, held both by user (row-major) and by item
/// (column-major). Rows are sorted by index with no duplicates. External ids
/// are kept alongside so files can be written back with the original ids.
///
/// In implicit mode the main lists contain only the 1-entries; observed
/// zeros (e.g. low ratings after binarization) live in a separate per-user
/// list so they stay distinguishable from never-observed entries.
class RatingsMatrix {
 public:
  RatingsMatrix() = default;

  /// Builds the matrix from triples. Throws DataError on duplicate pairs,
  /// out-of-range indices, or values that do not fit the mode.
  /// External ids default to the identity mapping when left empty.
  static RatingsMatrix from_triples(std::size_t n_users, std::size_t n_items,
                                    std::vector<Triple> triples, FeedbackMode mode,
                                    std::vector<std::int64_t> user_ids = {},
                                    std::vector<std::int64_t> item_ids = {},
                                    std::vector<Triple> observed_zeros = {});

  std::size_t n_users() const noexcept { return n_users_; }
  std::size_t n_items() const noexcept { return n_items_; }
  std::size_t nnz() const noexcept { return user_entries_.size(); }
  FeedbackMode mode() const noexcept { return mode_; }
  /// Number of rating levels L (max level in explicit mode, 2 in implicit mode).
  int levels() const noexcept { return levels_; }

  std::span<const Rating> user(std::size_t i) const {
    return {user_entries_.data() + user_ptr_[i], user_ptr_[i + 1] - user_ptr_[i]};
  }
  std::span<const Rating> item(std::size_t j) const {
    return {item_entries_.data() + item_ptr_[j], item_ptr_[j + 1] - item_ptr_[j]};
  }
  /// Items observed with value 0 for user i (implicit mode only).
  std::span<const std::int32_t> observed_zeros(std::size_t i) const;
  std::size_t n_observed_zeros() const noexcept { return zero_items_.size(); }

  const std::vector<std::int64_t>& user_ids() const noexcept { return user_ids_; }
  const std::vector<std::int64_t>& item_ids() const noexcept { return item_ids_; }

  /// Rating of (i, j) or nullptr when not stored. O(log row length).
  const double* find(std::size_t i, std::size_t j) const;

  std::vector<Triple> triples() const;
  std::vector<Triple> zero_triples() const;

  /// Same shape and ids, different entries.
  RatingsMatrix with_triples(std::vector<Triple> triples,
                             std::vector<Triple> observed_zeros = {}) const;

 private:
  std::size_t n_users_ = 0;
  std::size_t n_items_ = 0;
  FeedbackMode mode_ = FeedbackMode::kExplicit;
  int levels_ = 0;
  std::vector<std::size_t> user_ptr_{0};
  std::vector<Rating> user_entries_;
  std::vector<std::size_t> item_ptr_{0};
  std::vector<Rating> item_entries_;
  std::vector<std::size_t> zero_ptr_;
  std::vector<std::int32_t> zero_items_;
  std::vector<std::int64_t> user_ids_;
  std::vector<std::int64_t> item_ids_;
};

/// Parses "user item rating" lines (tab, comma or space separated; detected
/// from the first data line). Lines starting with '#' and blank lines are
/// skipped; fields after the third are ignored. External ids are remapped to
/// dense indices in ascending id order, unless explicit id tables are given,
/// in which case every id must appear in them.
RatingsMatrix load_ratings(std::istream& in, FeedbackMode mode,
                           const std::vector<std::int64_t>* user_ids = nullptr,
                           const std::vector<std::int64_t>* item_ids = nullptr);
RatingsMatrix load_ratings_file(const std::string& path, FeedbackMode mode,
                                const std::vector<std::int64_t>* user_ids = nullptr,
                                const std::vector<std::int64_t>* item_ids = nullptr);

/// Writes one tab-separated line per entry using external ids; values are
/// printed with enough digits to reload bit-exactly.
void save_ratings(std::ostream& out, const RatingsMatrix& r);
void save_ratings_file(const std::string& path, const RatingsMatrix& r);

/// "external_id internal_index" lines.
void save_id_map(std::ostream& out, const std::vector<std::int64_t>& ids);
std::vector<std::int64_t> load_id_map(std::istream& in);

struct TrainTestSplit {
  RatingsMatrix train;
  RatingsMatrix test;
  std::uint64_t seed = 0;
  std::size_t per_user_train_count = 0;
  std::size_t min_test = 0;
};

/// Keeps users with at least n_train + min_test ratings; each keeps exactly
/// n_train uniformly sampled train entries and the rest go to test. Dropped
/// users stay in the index space with empty rows. Throws DataError when no
/// user survives.
TrainTestSplit split_fixed_count(const RatingsMatrix& r, std::size_t n_train,
                                 std::size_t min_test, std::uint64_t seed);

/// Writes train.txt, test.txt, users.map, items.map and manifest.txt into
/// `dir` (created if missing).
void save_split(const std::string& dir, const TrainTestSplit& split);
TrainTestSplit load_split(const std::string& dir);

/// Ratings >= threshold become 1, the rest become observed zeros.
RatingsMatrix binarize(const RatingsMatrix& r, int threshold);

/// One pairwise preference: the user prefers item j over item k when y = +1.
struct Comparison {
  std::int32_t j;
  std::int32_t k;
  std::int8_t y;

  friend bool operator==(const Comparison&, const Comparison&) = default;
};

/// Pairs of items rated by `user` with different values, oriented so y = +1
/// (j is the higher-rated item). Ties produce no pair.
std::vector<Comparison> enumerate_comparisons(const RatingsMatrix& r, std::size_t user);

}  // namespace cfrank
