#include "cfrank/bloom.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "cfrank/error.hpp"

namespace cfrank {

namespace {

std::uint64_t mix64(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

BloomParams bloom_params(std::size_t capacity, double fp_rate) {
  if (capacity < 1) throw ConfigError("bloom capacity must be >= 1");
  if (!(fp_rate > 0.0 && fp_rate < 1.0)) throw ConfigError("bloom false-positive rate must lie in (0, 1)");
  const double ln2 = std::log(2.0);
  const double n = static_cast<double>(capacity);
  auto bits = static_cast<std::size_t>(std::ceil(n * std::log(1.0 / fp_rate) / (ln2 * ln2)));
  bits = std::max<std::size_t>(bits, 1);
  auto hashes = static_cast<std::size_t>(
      std::max(1.0, std::round(static_cast<double>(bits) / n * ln2)));
  return {bits, hashes};
}

BloomHasher::BloomHasher(std::size_t bits, std::size_t hashes, std::uint64_t seed1,
                         std::uint64_t seed2)
    : bits_(bits), hashes_(hashes), seed1_(seed1), seed2_(seed2) {
  if (hashes < 1) throw ConfigError("bloom filter needs at least one hash function");
  if (bits < hashes)
    throw ConfigError("bloom filter of " + std::to_string(bits) + " bits cannot hold " +
                      std::to_string(hashes) + " distinct hash positions");
}

void BloomHasher::positions(std::uint64_t key, std::vector<std::size_t>& out) const {
  out.resize(hashes_);
  const std::uint64_t c = bits_;
  const std::uint64_t h1 = mix64(key ^ seed1_) % c;
  // Non-zero stride so the k probes are not all the same slot.
  const std::uint64_t h2 = c > 1 ? 1 + mix64(key ^ seed2_) % (c - 1) : 0;
  std::uint64_t pos = h1;
  for (std::size_t t = 0; t < hashes_; ++t) {
    out[t] = static_cast<std::size_t>(pos);
    pos += h2;
    if (pos >= c) pos -= c;
  }
}

BloomFilter::BloomFilter(const BloomHasher& hasher)
    : hasher_(hasher), words_((hasher.bits() + 63) / 64, 0) {}

void BloomFilter::add(std::uint64_t key) {
  std::vector<std::size_t> pos;
  hasher_.positions(key, pos);
  for (auto p : pos) words_[p >> 6] |= std::uint64_t{1} << (p & 63);
  ++inserts_;
}

bool BloomFilter::contains(std::uint64_t key) const {
  std::vector<std::size_t> pos;
  hasher_.positions(key, pos);
  return std::all_of(pos.begin(), pos.end(), [&](std::size_t p) { return test(p); });
}

void BloomFilter::merge(const BloomFilter& other) {
  if (!(hasher_ == other.hasher_))
    throw ConfigError("cannot union bloom filters with different size, hash count or seeds");
  for (std::size_t w = 0; w < words_.size(); ++w) words_[w] |= other.words_[w];
  inserts_ += other.inserts_;
}

std::size_t BloomFilter::popcount() const {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

BloomFilter bloom_union(const BloomFilter& a, const BloomFilter& b) {
  BloomFilter out = a;
  out.merge(b);
  return out;
}

double bloom_size_estimate(std::size_t set_bits, std::size_t bits, std::size_t hashes) {
  if (set_bits >= bits) return std::numeric_limits<double>::infinity();
  const double c = static_cast<double>(bits);
  return -(c / static_cast<double>(hashes)) * std::log1p(-static_cast<double>(set_bits) / c);
}

}  // namespace cfrank
