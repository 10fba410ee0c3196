#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace cfrank {

struct Edge {
  std::int32_t a;
  std::int32_t b;
  double weight = 1.0;

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Neighbor {
  std::int32_t node;
  double weight;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Undirected weighted graph in adjacency-list (CSR) form. Every edge is
/// stored in both endpoint lists; lists are sorted by neighbor index.
class Graph {
 public:
  Graph() = default;
  explicit Graph(std::size_t n) : n_(n), ptr_(n + 1, 0) {}

  /// Self-loops are dropped; repeated edges keep the last weight seen.
  static Graph from_edges(std::size_t n, std::vector<Edge> edges);

  std::size_t n() const noexcept { return n_; }
  /// Number of undirected edges.
  std::size_t num_edges() const noexcept { return adj_.size() / 2; }
  std::span<const Neighbor> neighbors(std::size_t i) const {
    return {adj_.data() + ptr_[i], ptr_[i + 1] - ptr_[i]};
  }
  std::size_t degree(std::size_t i) const { return ptr_[i + 1] - ptr_[i]; }

  /// Each undirected edge once, with a < b.
  std::vector<Edge> edges() const;

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  std::size_t n_ = 0;
  std::vector<std::size_t> ptr_{0};
  std::vector<Neighbor> adj_;
};

/// Reads "u v [w]" lines. Node ids are dense 0-based indices unless an id
/// table is supplied, in which case ids are resolved through it and edges
/// touching unknown ids are skipped. `n` fixes the node count; 0 means
/// max id + 1.
Graph load_graph(std::istream& in, std::size_t n = 0,
                 const std::vector<std::int64_t>* ids = nullptr);
Graph load_graph_file(const std::string& path, std::size_t n = 0,
                      const std::vector<std::int64_t>* ids = nullptr);
void save_graph(std::ostream& out, const Graph& g);
void save_graph_file(const std::string& path, const Graph& g);

/// Unweighted graph linking every pair of nodes within `depth` hops
/// (the support of G + G^2 + ... + G^depth, without self-loops).
Graph graph_power(const Graph& g, int depth);

/// Weighted sum w_1 G + w_2 G^2 + ... of adjacency powers (walk counts
/// weighted by edge products), diagonal dropped.
Graph graph_polynomial(const Graph& g, const std::vector<double>& weights);

/// Hop distances from `source`, -1 for unreachable nodes; stops at max_depth.
std::vector<int> bfs_distances(const Graph& g, std::size_t source, int max_depth);

}  // namespace cfrank
