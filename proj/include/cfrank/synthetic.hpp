#pragma once

#include <cstdint>

#include "cfrank/graph.hpp"
#include "cfrank/matrix.hpp"
#include "cfrank/ratings.hpp"

namespace cfrank {

struct SyntheticSpec {
  std::size_t n_users = 1000;
  std::size_t n_items = 200;
  std::size_t rank = 10;
  double influence_weight = 0.6;  // w in [0, 1]
  int propagation_steps = 3;      // T
  double edge_prob = 0.005;       // Erdos-Renyi p
  double train_frac = 0.05;
  double test_frac = 0.02;

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

struct SyntheticData {
  RatingsMatrix train;
  RatingsMatrix test;
  Graph graph;
  Matrix user_factors;  // after propagation
  Matrix item_factors;
};

/// Social-influence synthetic data: Gaussian factors, an Erdos-Renyi user
/// graph, T propagation steps U_i <- w * sum_{j~i} U_j + (1 - w) * U_i,
/// ratings R = U V^T, and disjoint uniform train/test samples of the n*m
/// entries at the requested fractions.
SyntheticData generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

/// One propagation step (exposed for tests).
Matrix propagate(const Matrix& u, const Graph& g, double w);

}  // namespace cfrank
