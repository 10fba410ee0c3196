#pragma once

#include <cstdint>
#include <vector>

namespace cfrank {

struct BloomParams {
  std::size_t bits;    // c
  std::size_t hashes;  // k
};

/// Classic sizing for `capacity` keys at false-positive rate fp_rate:
/// c = ceil(n ln(1/eps) / ln^2 2), k = max(1, round(c/n * ln 2)).
BloomParams bloom_params(std::size_t capacity, double fp_rate);

/// k hash positions per key by double hashing,
/// h_t(x) = (h1(x) + t * h2(x)) mod c, from two seeded 64-bit mixers.
class BloomHasher {
 public:
  BloomHasher(std::size_t bits, std::size_t hashes, std::uint64_t seed1, std::uint64_t seed2);

  std::size_t bits() const noexcept { return bits_; }
  std::size_t hashes() const noexcept { return hashes_; }
  std::uint64_t seed1() const noexcept { return seed1_; }
  std::uint64_t seed2() const noexcept { return seed2_; }

  void positions(std::uint64_t key, std::vector<std::size_t>& out) const;
  std::vector<std::size_t> positions(std::uint64_t key) const {
    std::vector<std::size_t> out;
    positions(key, out);
    return out;
  }

  friend bool operator==(const BloomHasher&, const BloomHasher&) = default;

 private:
  std::size_t bits_;
  std::size_t hashes_;
  std::uint64_t seed1_;
  std::uint64_t seed2_;
};

class BloomFilter {
 public:
  explicit BloomFilter(const BloomHasher& hasher);

  void add(std::uint64_t key);
  bool contains(std::uint64_t key) const;
  /// Bitwise OR with `other`; throws ConfigError unless both share (c, k, seeds).
  void merge(const BloomFilter& other);

  std::size_t bits() const noexcept { return hasher_.bits(); }
  std::size_t hashes() const noexcept { return hasher_.hashes(); }
  std::size_t popcount() const;
  std::size_t insert_count() const noexcept { return inserts_; }
  bool test(std::size_t bit) const { return (words_[bit >> 6] >> (bit & 63)) & 1U; }
  const std::vector<std::uint64_t>& words() const noexcept { return words_; }
  const BloomHasher& hasher() const noexcept { return hasher_; }

 private:
  BloomHasher hasher_;
  std::vector<std::uint64_t> words_;
  std::size_t inserts_ = 0;
};

/// BloomFilter union (returns a new filter).
BloomFilter bloom_union(const BloomFilter& a, const BloomFilter& b);

/// -(c/k) ln(1 - nnz/c), or +infinity when every bit is set.
double bloom_size_estimate(std::size_t set_bits, std::size_t bits, std::size_t hashes);
inline double bloom_size_estimate(const BloomFilter& f) {
  return bloom_size_estimate(f.popcount(), f.bits(), f.hashes());
}

}  // namespace cfrank
