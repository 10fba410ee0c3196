#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "cfrank/bloom.hpp"
#include "cfrank/graph.hpp"
#include "cfrank/ratings.hpp"

namespace cfrank {

struct DnaConfig {
  std::size_t bits = 0;    // c
  std::size_t hashes = 1;  // k
  int depth = 1;           // d
  double theta = std::numeric_limits<double>::infinity();
  std::uint64_t seed1 = 0x5bd1e995ULL;
  std::uint64_t seed2 = 0x1b873593ULL;
  std::size_t threads = 1;
};

/// n x c boolean matrix; row i holds the bit positions of node i's
/// multi-hop Bloom filter, sorted ascending.
class DnaEncoding {
 public:
  DnaEncoding() = default;
  DnaEncoding(std::size_t n, const DnaConfig& cfg, std::vector<std::size_t> row_ptr,
              std::vector<std::uint32_t> bits);

  std::size_t n() const noexcept { return n_; }
  std::size_t bits() const noexcept { return cfg_.bits; }
  std::size_t hashes() const noexcept { return cfg_.hashes; }
  int depth() const noexcept { return cfg_.depth; }
  double theta() const noexcept { return cfg_.theta; }
  const DnaConfig& config() const noexcept { return cfg_; }
  BloomHasher hasher() const { return {cfg_.bits, cfg_.hashes, cfg_.seed1, cfg_.seed2}; }

  std::span<const std::uint32_t> row(std::size_t i) const {
    return {bits_.data() + ptr_[i], ptr_[i + 1] - ptr_[i]};
  }
  std::size_t nnz() const noexcept { return bits_.size(); }
  bool test(std::size_t i, std::size_t bit) const;
  /// True when every hash position of `node` is set in row i.
  bool contains(std::size_t i, std::uint64_t node) const;

  friend bool operator==(const DnaEncoding& a, const DnaEncoding& b);

 private:
  std::size_t n_ = 0;
  DnaConfig cfg_;
  std::vector<std::size_t> ptr_{0};
  std::vector<std::uint32_t> bits_;
};

/// Multi-hop neighborhood encoding. Every node's filter starts with the node
/// itself; each of the d rounds unions the previous round's filters of the
/// node's direct neighbors into a copy of its own previous filter, skipping
/// the remaining neighbors of a node once its size estimate exceeds theta.
/// Rounds read only the previous round (Jacobi style), so the result does
/// not depend on node order or thread count.
DnaEncoding dna_encode(const Graph& g, const DnaConfig& cfg);

/// The (n + c)-node graph [[G, B], [B^T, 0]]: bit b of row i becomes a unit
/// edge between node i and pseudo-node n + b.
Graph augment_graph(const Graph& g, const DnaEncoding& b);

/// B as an n x c implicit matrix of ones (for Co-Factor side data).
RatingsMatrix bipartite_view(const DnaEncoding& b);

void save_dna(std::ostream& out, const DnaEncoding& b);
DnaEncoding load_dna(std::istream& in);
void save_dna_file(const std::string& path, const DnaEncoding& b);
DnaEncoding load_dna_file(const std::string& path);

}  // namespace cfrank
